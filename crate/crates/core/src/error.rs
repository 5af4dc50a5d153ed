use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential evaluated at the point charge (r = 0, theta = 0)")]
    SourcePoint,

    #[error("quadrature did not converge: value {value:.6e}, error estimate {error:.3e} (tolerance {tolerance:.3e})")]
    QuadratureNonConvergence {
        value: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("ODE step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    EigenNonConvergence { index: usize, iterations: usize },

    #[error("overlap matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no bound state detected in bracket [{k_lo}, {k_hi}]")]
    NoBoundState { k_lo: f64, k_hi: f64 },

    #[error("state index {index} out of range (dimension {dim})")]
    StateIndex { index: usize, dim: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
