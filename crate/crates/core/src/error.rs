use thiserror::Error;

use crate::solver::ContinuityState;

/// Errors raised by the grid, reduction and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is invalid: need an even n >= 4")]
    InvalidGrid(usize),

    #[error("fields live on different grids ({0} vs {1})")]
    GridMismatch(usize, usize),

    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("field contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("Laplacian right-hand side has mean {mean:e}, exceeding tolerance {tol:e}")]
    NonZeroMeanInput { mean: f64, tol: f64 },

    #[error("metric is degenerate: min(nu) = {min_nu:e}")]
    DegenerateMetric { min_nu: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("line search step underflowed to {step:e}")]
    LineSearchFailed { step: f64 },

    #[error("Krylov solve reduced the residual only by {reduction:e} after {iterations} iterations")]
    LinearSolveStagnated { iterations: usize, reduction: f64 },

    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    MaxItersExceeded { iterations: usize, residual: f64 },

    #[error("continuation stalled at t = {t} with step {step:e}")]
    ContinuationStalled {
        t: f64,
        step: f64,
        last: Box<ContinuityState>,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed KTCY dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
