use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CmtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CmtError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no open channel at E = {energy}")]
    NoOpenChannel { energy: f64 },

    #[error("numerically degenerate system at E = {energy} (condition estimate {condition:e})")]
    NumericalDegeneracy { energy: f64, condition: f64 },

    #[error("eigenvalue solver did not converge; matrix written to {}", dump.display())]
    EigenSolver { dump: PathBuf },

    #[error("quadrature did not reach tolerance {tolerance:e}; best estimate {estimate} (error ~{error:e})")]
    Accuracy {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },
}

impl CmtError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CmtError::InvalidInput(msg.into())
    }
}
