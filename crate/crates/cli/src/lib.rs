//! Library side of the `forge` command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod ops;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use manifest::Manifest;
pub use run::{plan, run_experiment};
