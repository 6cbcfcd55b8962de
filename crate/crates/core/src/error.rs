//! Crate-wide error type.

use thiserror::Error;

use crate::dynamics::FixedPoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("chart boundary: {0}")]
    ChartBoundary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("step size underflow at t = {t:.6e}; flow too stiff for the requested tolerance")]
    StepSizeUnderflow { t: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t:.6e}")]
    StepBudgetExhausted { t: f64, max_steps: usize },

    #[error("relative energy drift {drift:.3e} exceeds tolerance {tol:.3e}")]
    EnergyDrift { drift: f64, tol: f64 },

    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },

    #[error("singular or rank-deficient Jacobian (rank {rank} of {cols})")]
    DegenerateJacobian { rank: usize, cols: usize },

    #[error(
        "continuation branch lost at parameter {at_param}: coordinate jump {jump:.3e} \
         exceeds threshold {threshold:.3e} ({} points recovered)",
        partial.len()
    )]
    ContinuationBreak {
        at_param: f64,
        jump: f64,
        threshold: f64,
        partial: Vec<FixedPoint>,
    },

    #[error("empty energy shell: {0}")]
    EmptyShell(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("window calibration failed: {0}")]
    Calibration(String),

    #[error("degenerate design matrix: {0}")]
    DegenerateDesign(String),

    #[error("no feasible solution: {0}")]
    NoSolution(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Eigen(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
