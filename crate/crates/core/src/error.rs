use thiserror::Error;

/// Errors surfaced by solvers and model constructors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the function's domain: {0}")]
    Domain(String),

    #[error("valuation is not homogeneous")]
    NotHomogeneous,

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("inner solver did not converge within {iterations} iterations (residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("iteration budget exhausted: achieved distance {achieved:.6e} > target {target:.6e}")]
    BudgetExhausted { achieved: f64, target: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
