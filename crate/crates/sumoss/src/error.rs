use alloc::string::String;

/// Errors reported by the planning and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A coordinate or model parameter was NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A model parameter is outside its admissible range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A covariance matrix lost positive definiteness (duplicate
    /// positions with zero jitter, or conditional variance underflow).
    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    /// The deviation covariance for a target is singular and
    /// regularization is disabled.
    #[error("degenerate deviation covariance: {0}")]
    DegenerateDeviation(String),

    /// A planner was asked to extend a selection past half the
    /// candidate set, where the gain objective is no longer reliable.
    #[error("planner capacity exceeded: {chosen} targets chosen of {candidates} candidates")]
    Capacity { chosen: usize, candidates: usize },

    /// A mission log failed replay validation.
    #[error("log validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = core::result::Result<T, Error>;
