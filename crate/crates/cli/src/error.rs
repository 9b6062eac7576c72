use std::io;
use std::path::PathBuf;

use cmt_core::CmtError;
use thiserror::Error;

use crate::config::ConfigErrors;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:\n{errors}", path.display())]
    Config { path: PathBuf, errors: ConfigErrors },

    #[error("{0}")]
    Usage(String),

    #[error("cannot access {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error(transparent)]
    Numerical(#[from] CmtError),

    #[error("self-check failed: {0} check(s) out of tolerance")]
    Selfcheck(usize),
}

impl CliError {
    /// Process exit status: 1 configuration, 2 runtime, 3 self-check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Numerical(_) => 2,
            CliError::Selfcheck(_) => 3,
        }
    }
}
