use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("matrix is not unimodular (determinant {0})")]
    NotUnimodular(i128),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coverage violation: {0}")]
    Coverage(String),

    #[error("insufficient counts: {0}")]
    InsufficientCounts(String),

    #[error("empty admissible set: {0}")]
    EmptyAdmissible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn overflow(what: impl Into<String>) -> Error {
    Error::Overflow(what.into())
}
