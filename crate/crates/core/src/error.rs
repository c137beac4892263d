use thiserror::Error;

/// Errors produced by the geometry, tree and estimator routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient sample: need at least {needed} points, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("point is at a singularity of the closest-point map: {0}")]
    Singular(String),

    #[error("sampler gave up after {attempts} attempts ({accepted} accepted, rate {rate:.2e})")]
    GaveUp {
        attempts: usize,
        accepted: usize,
        rate: f64,
    },

    #[error("every split attempt produced an empty child")]
    DegenerateSplit,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
