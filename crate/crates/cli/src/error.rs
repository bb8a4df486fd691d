use std::path::Path;

use thiserror::Error;

/// Command failures, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("oracle or convergence failure: {0}")]
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Input(_) => 2,
            CliError::Oracle(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

impl From<apdfp_core::Error> for CliError {
    fn from(err: apdfp_core::Error) -> Self {
        use apdfp_core::Error as E;
        match err {
            E::Parse { .. } => CliError::Input(err.to_string()),
            E::NotConverged(_) | E::NonFinite { .. } => CliError::Oracle(err.to_string()),
            E::InvalidParameter(_) | E::DimensionMismatch { .. } => {
                CliError::Config(err.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
