//! Experiment driver for `wavecip`: scenario files in, cached controls,
//! per-frequency jobs, reconstruction artifacts and plot data out.
//!
//! The binary is a thin clap wrapper around the `cmd_*` functions, which
//! return reports so the same runs can be driven from tests.

pub mod artifacts;
pub mod cache;
pub mod commands;
pub mod config;

pub use commands::{cmd_control, cmd_forward, cmd_reconstruct, cmd_validate};
pub use config::{Overrides, Scenario, ScenarioConfig};

/// Failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<wavecip::Error> for CliError {
    fn from(e: wavecip::Error) -> Self {
        match e {
            wavecip::Error::Io(io) => CliError::Io(io),
            other => CliError::Solver(other.to_string()),
        }
    }
}
