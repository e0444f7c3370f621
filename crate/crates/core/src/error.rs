//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data (CSV shape, label values,
    /// dimension mismatches, out-of-range indices, bad parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// CSV cell that failed to parse, with 1-based row/column position.
    #[error("row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    /// The simplex core stalled: iteration cap reached, or an optimal basis
    /// failed the final feasibility re-check.
    #[error("numerical instability in LP solve: {0}")]
    Numerical(String),

    /// SGD weights left the trust region (`‖w‖∞ > 1e6` or non-finite).
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    /// Problem size beyond a hard limit of an exhaustive routine.
    #[error("{0}")]
    TooLarge(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
