//! Configuration, execution and reporting for the `debias` command.

pub mod args;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{
    ExperimentConfig, ExperimentKind, LawConfig, ModelConfig, OutputFormat, Settings,
};
pub use error::CliError;
pub use experiment::{run_experiment, DesignRow, DesignTable, Outcome};
