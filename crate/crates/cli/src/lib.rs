//! Experiment runner: configuration, sweeps and data files.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use experiment::{run_single, run_sweep, RunResult, Status, SweepResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical invariant violated: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
