//! Command-line harness for `ingarch-core`: scenario simulation, model fits
//! on CSV data, replication tables and residual diagnostics.
//!
//! Every command writes into its own output directory together with a
//! `manifest.json` recording the resolved configuration and content hashes
//! of its inputs.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
