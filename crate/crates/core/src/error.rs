//! Error types shared across the library.

use thiserror::Error;

/// Errors raised by geometry primitives and learning routines.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero vector where a direction is required")]
    ZeroVector,

    #[error("non-finite coordinate at position {index}")]
    NonFinite { index: usize },

    #[error("empty sample where at least one point is required")]
    EmptySample,

    #[error("invalid label {label}: labels must be 0 or 1")]
    InvalidLabel { label: u8 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no iterate had a defined validation score; validation sample too small for the subset mass")]
    NoValidCandidate,

    #[error("list learning produced no candidates")]
    EmptyList,

    #[error("no supported candidate: every classifier-halfspace pair scored undefined")]
    NoSupportedCandidate,
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
