use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ingarch_cli::commands;
use ingarch_cli::{CliError, CliResult, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ingarch", version, about = "Bayesian fitting of Poisson INGARCH(1,1) models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a count series from a scenario or explicit parameters.
    Simulate(Common),
    /// Metropolis-Hastings with the state-dependent Gaussian proposal.
    FitMh(Common),
    /// Pareto-smoothed adaptive importance sampling.
    FitPsais(Common),
    /// Exact-likelihood maximum likelihood.
    FitMle(Common),
    /// Repeated simulate-and-fit with an accuracy table.
    Replicate(Common),
    /// Residuals and forecast scores for a fit-mh output directory.
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario id (A1, A2, B1, B3).
    #[arg(long)]
    scenario: Option<String>,
    /// Count series CSV with a `count` header.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Size of the replication worker pool.
    #[arg(long)]
    workers: Option<usize>,
    /// Series length for `simulate` and `replicate`.
    #[arg(long)]
    n: Option<usize>,
    /// Fitted run directory for `diagnose`.
    #[arg(long)]
    fit: Option<PathBuf>,
}

impl Common {
    fn resolve(self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! flag {
            ($field:ident) => {
                if self.$field.is_some() {
                    cfg.$field = self.$field;
                }
            };
        }
        flag!(seed);
        flag!(out);
        flag!(scenario);
        flag!(data);
        flag!(workers);
        flag!(n);
        if self.fit.is_some() {
            cfg.fit_dir = self.fit;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let (name, common, f): (&str, Common, fn(&ExperimentConfig) -> CliResult<PathBuf>) = match cli.command {
        Command::Simulate(c) => ("simulate", c, commands::cmd_simulate),
        Command::FitMh(c) => ("fit-mh", c, commands::cmd_fit_mh),
        Command::FitPsais(c) => ("fit-psais", c, commands::cmd_fit_psais),
        Command::FitMle(c) => ("fit-mle", c, commands::cmd_fit_mle),
        Command::Replicate(c) => ("replicate", c, commands::cmd_replicate),
        Command::Diagnose(c) => ("diagnose", c, commands::cmd_diagnose),
    };
    let cfg = common.resolve()?;
    log::info!("running {name}");
    f(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INGARCH_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &CliError) -> u8 {
    e.exit_code() as u8
}
