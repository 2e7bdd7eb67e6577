use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("quadrature failure for kernel entry ({i}, {j}): {reason}")]
    Quadrature { i: usize, j: usize, reason: String },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { what: String, iterations: usize, residual: f64 },

    #[error("zero input: {0}")]
    ZeroInput(String),

    #[error("not in the coercive cone: quadratic form is {0:e}")]
    NotCoercive(f64),

    #[error("spectrum does not bracket mu = {mu}: {reason}")]
    Bracket { mu: f64, reason: String },

    #[error("endpoint construction failed: Q(u0) = {q0:e}, Q(u1) = {q1:e}")]
    Endpoints { q0: f64, q1: f64 },

    #[error("boundary not dominated: {0}")]
    Boundary(String),

    #[error("scan aborted: {0}")]
    ScanAborted(String),

    #[error("kernel cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
