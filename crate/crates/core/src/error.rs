use thiserror::Error;

/// Errors raised by the model, the inner solvers and the block coordinate
/// descent driver.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A matrix that must be positive definite is not (Cholesky failed).
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Shapes or task counts disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input data violates a documented precondition (zero variance,
    /// non-PSD covariance, non-positive sample count, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Invalid parameter value (ρ ≤ 0, zero sweeps, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A caller broke the precondition of an inner routine.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Non-finite or otherwise unusable intermediate value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Solver state lost an invariant it should maintain by construction.
    #[error("internal state error: {0}")]
    InternalState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
