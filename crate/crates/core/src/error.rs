//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simulation and numerics operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two positions coincide where a direction is required.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// A lookup fell outside the tabulated range.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Tensor shapes do not conform for the requested operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A numeric operation produced a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// Serialized parameter data is malformed or has the wrong version.
    #[error("bad serialized data: {0}")]
    BadData(String),

    /// Scenario configuration failed validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
