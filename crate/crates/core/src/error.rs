use std::path::PathBuf;

use thiserror::Error;

use crate::scheme::ValidationErrors;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationErrors),

    #[error("projected alphabet size {projected} exceeds the cap of {cap}")]
    CapExceeded { projected: u128, cap: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input lies outside the domain where the operation is defined
    /// (boundary of the simplex, zero frequencies, non-aligned depths, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("position {position} lies beyond the explicit prefix of length {len}")]
    PrefixExhausted { position: usize, len: usize },

    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed JSON at line {line}, column {column}: {message}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn json(path: impl Into<PathBuf>, err: &serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
