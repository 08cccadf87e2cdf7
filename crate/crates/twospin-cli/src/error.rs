//! Process-level error type mapping failures onto exit codes.

use std::path::PathBuf;

use thiserror::Error;

/// Exit code for configuration or input errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for numeric failures (non-convergent fits, singular systems).
pub const EXIT_NUMERIC: u8 = 3;
/// Exit code for other failures (I/O).
pub const EXIT_OTHER: u8 = 1;

/// Anything that can abort a subcommand.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration document or command input is invalid.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numeric routine failed; the message names the offending trial.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Reading or writing a file failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// Exit code the process should terminate with.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io { .. } => EXIT_OTHER,
        }
    }

    /// Wrap an I/O failure with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
