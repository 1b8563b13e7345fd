//! Harness-level errors and their process exit codes.

use posteriorflow_core::CoreError;
use thiserror::Error;

/// Exit code for configuration, input, and validation failures.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code when a sampler run diverges (partial traces are kept).
pub const EXIT_DIVERGENCE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration file problem with the offending location.
    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },
    /// Configuration or argument problem without a file location.
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    /// A sampler run produced non-finite particles; its partial trace was
    /// still written.
    #[error("sampler {sampler} (seed {seed}) diverged at iteration {iteration}")]
    Divergence {
        sampler: String,
        seed: u64,
        iteration: u64,
    },
    /// One or more validation checks failed.
    #[error("validation failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Invalid(message.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Divergence { .. } => EXIT_DIVERGENCE,
            _ => EXIT_CONFIG,
        }
    }
}
