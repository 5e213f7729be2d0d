//! Command-line front end for the optomechanical entanglement library.

pub mod commands;
pub mod config;
pub mod csv;

pub use commands::{run, Command};
pub use config::{config_from_map, parse_config, Detuning, ParamSource, RunConfig, SweepKindName};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] omc_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("oracle gain error {max_error:.3e} exceeds tolerance {tolerance:.3e}")]
    ValidationFailed { max_error: f64, tolerance: f64 },
}

impl CliError {
    /// Short machine-readable category.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "model",
            CliError::Io(_) => "io",
            CliError::ValidationFailed { .. } => "validation",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed { .. } => 2,
            _ => 1,
        }
    }

    /// Single-line JSON rendering for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.code(), "message": self.to_string() }).to_string()
    }
}
