//! Error types shared across the crate.

use crate::engine::RunTrace;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A problem or experiment specification failed validation.
    /// Carries the offending field so callers can point at it.
    #[error("invalid spec: field `{field}`: {message}")]
    InvalidSpec { field: String, message: String },

    /// Vector dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A parameter is outside the validity domain of a formula
    /// (step size too large, iteration index zero, and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The SGD recursion produced a non-finite or exploding iterate.
    /// The partial trace up to the failing iteration is attached.
    #[error("run diverged at iteration {iteration}")]
    Diverged {
        iteration: u64,
        trace: Box<RunTrace>,
    },

    /// Not enough (or non-positive) data for a fit or an estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A dataset file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Configuration file violates the schema.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid_spec(field: &str, message: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
