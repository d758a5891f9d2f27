use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid count series: {0}")]
    InvalidSeries(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameters outside the stationarity region: {0}")]
    NonStationary(String),

    #[error("numerical overflow in the intensity recursion at t = {t} (value {value})")]
    IntensityOverflow { t: usize, value: f64 },

    #[error("ill-conditioned proposal (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("Pólya-Gamma sampler exceeded {0} accept-reject iterations")]
    SamplerFailure(usize),

    #[error("degenerate tail: {0}")]
    DegenerateTail(String),

    #[error("constant series: {0}")]
    ZeroVariance(String),

    #[error("optimizer did not converge after {evaluations} evaluations (best log-likelihood {best_value})")]
    NoConvergence {
        evaluations: usize,
        best_value: f64,
        best_point: Vec<f64>,
    },

    #[error("data error: {0}")]
    Data(String),
}
