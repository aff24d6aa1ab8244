use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("degenerate input at column {column}: {reason}")]
    Degenerate { column: usize, reason: String },

    #[error("degenerate input: {0}")]
    DegenerateValues(String),

    #[error("state error: {0}")]
    State(String),

    #[error("ordering error: frame {index} does not follow last stored frame {last}")]
    Ordering { index: usize, last: usize },

    #[error("empty memory: no stored frames and no temporary frame")]
    EmptyMemory,

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
