//! Batch experiments for optimal prediction of the Klein-Gordon equation.
//!
//! The library side of the `optpredict` binary: configuration parsing, a
//! thread-pool sample executor, CSV and JSON report writers, physical-space
//! field reconstruction and one entry point per command.

pub mod commands;
pub mod config;
pub mod executor;
pub mod field;
pub mod output;

use optpredict_core::Error as CoreError;

/// Exit status for malformed configuration or invalid parameters.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration. Exit status 2.
    #[error("{0}")]
    Usage(String),
    /// A computation or IO step failed. Exit status 1.
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParams(_)
            | CoreError::HypothesisViolated(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::ShrinkNotAllowed { .. } => CliError::Usage(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.to_string())
    }
}
