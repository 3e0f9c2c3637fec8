//! Command errors and their exit codes.

use crate::config::ConfigError;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Initial data rejected before any compute.
    #[error("invalid initial data: {0}")]
    InitialData(releuler::Error),
    /// Failure during compute; partial outputs may exist in `dir`.
    #[error("runtime failure: {source}")]
    Runtime {
        source: releuler::Error,
        dir: Option<PathBuf>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::InitialData(_) => EXIT_CONFIG,
            CliError::Runtime { .. } | CliError::Io(_) => EXIT_RUNTIME,
        }
    }

    pub fn runtime(source: releuler::Error) -> Self {
        CliError::Runtime { source, dir: None }
    }
}

impl From<releuler::Error> for CliError {
    fn from(e: releuler::Error) -> Self {
        CliError::runtime(e)
    }
}
