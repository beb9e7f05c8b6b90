use thiserror::Error;

pub type Result<T, E = FapError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FapError {
    /// An argument lies outside the domain of a function (e.g. `K_ν(x)` for `x ≤ 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter violates its invariant (e.g. `λ ≤ 0`).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Two VDFAP laws that do not share drift and dimension were combined.
    #[error("stability violation: {0}")]
    StabilityViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl FapError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        FapError::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FapError::Domain(msg.into())
    }
}
