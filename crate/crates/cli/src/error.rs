use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command line, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const EXIT_USAGE: u8 = 1;
    pub const EXIT_VALIDATION: u8 = 2;
    pub const EXIT_SOLVER: u8 = 3;
    pub const EXIT_IO: u8 = 4;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => Self::EXIT_USAGE,
            CliError::Validation(_) => Self::EXIT_VALIDATION,
            CliError::Solver(_) => Self::EXIT_SOLVER,
            CliError::Io { .. } => Self::EXIT_IO,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<spdc_core::Error> for CliError {
    fn from(e: spdc_core::Error) -> Self {
        use spdc_core::Error as E;
        match e {
            E::Usage(_) => CliError::Usage(e.to_string()),
            E::Domain { .. } | E::Precondition(_) => CliError::Validation(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
