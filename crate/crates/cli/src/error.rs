use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ifs_ergodic::Error),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    /// A flag or parameter value that cannot be used.
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for an exceeded enumeration budget, 3 for a breached internal
    /// invariant, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(ifs_ergodic::Error::BudgetExceeded { .. }) => 2,
            CliError::Core(ifs_ergodic::Error::InvariantBreach(_)) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
