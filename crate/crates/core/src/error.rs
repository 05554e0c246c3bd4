use std::io;

use thiserror::Error;

/// Errors raised by the kernels, solvers and measurement routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("accuracy not achieved: {0}")]
    Accuracy(String),

    #[error("singular step at index {index}: diagonal weight {diagonal}")]
    SingularStep { index: usize, diagonal: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular kernel: {0}")]
    SingularKernel(String),

    #[error("linear solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    LinearSolve { residual: f64, iterations: usize },

    #[error("invalid coefficient field: {0}")]
    Coefficients(String),

    #[error("quadrature tail bound {bound:e} exceeds tolerance {tolerance:e}")]
    QuadratureTail { bound: f64, tolerance: f64 },

    #[error("negative value {value:e} at {location}")]
    Negativity { value: f64, location: String },

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("degenerate measurement: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
