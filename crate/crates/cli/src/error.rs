use thiserror::Error;

/// Front-end failure classes, each with its own exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ingarch_core::Error> for CliError {
    fn from(e: ingarch_core::Error) -> Self {
        use ingarch_core::Error as E;
        match e {
            E::InvalidSeries(_) | E::Data(_) => CliError::Data(e.to_string()),
            E::InvalidParameter(_) | E::NonStationary(_) => CliError::Config(e.to_string()),
            E::IntensityOverflow { .. }
            | E::IllConditioned { .. }
            | E::SamplerFailure(_)
            | E::DegenerateTail(_)
            | E::ZeroVariance(_)
            | E::NoConvergence { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
