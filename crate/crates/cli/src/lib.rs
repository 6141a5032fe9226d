//! Command-line driver for the jtload model.

pub mod commands;
pub mod format;
pub mod sweep;

use std::process::ExitCode;

pub use commands::{run, Cli};

/// Failures split by who is at fault, which fixes the exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files.
    #[error("{0:#}")]
    Input(anyhow::Error),
    /// The computation itself failed.
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
        }
    }
}

impl From<jtload::Error> for CliError {
    fn from(e: jtload::Error) -> Self {
        use jtload::Error::*;
        match e {
            Dimension(_) | InvalidPattern(_) | InvalidParameter { .. } | Precondition(_) | Parse { .. } => {
                CliError::Input(e.into())
            }
            Domain(_) | NotConverged(_) | Consistency(_) => CliError::Runtime(e.into()),
        }
    }
}
