use thiserror::Error;

use crate::types::ClusterId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cluster {0} not found")]
    ClusterNotFound(ClusterId),

    #[error("{0} is undefined for empty input")]
    EmptyInput(&'static str),

    #[error("elapsed time must be positive, got {0}")]
    ZeroElapsed(f64),

    #[error("malformed CSV at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("pipeline stage failed: {0}")]
    Pipeline(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by user-supplied configuration rather than
    /// something that went wrong while running.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
