use thiserror::Error;

use crate::optimal::Solution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is singular (min eigenvalue {min_eigenvalue:e} below {threshold:e})")]
    Singular { min_eigenvalue: f64, threshold: f64 },

    #[error("bad matrix shape: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("count mismatch: {states} states but {operators} measurement operators")]
    CountMismatch { states: usize, operators: usize },

    #[error("index {index} out of range for {len} blocks")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("state eigenvectors span a {span_rank}-dimensional subspace of a {dim}-dimensional space")]
    SpanDeficient { span_rank: usize, dim: usize },

    #[error("bad ranks: {0}")]
    BadRanks(String),

    #[error("bad priors: {0}")]
    BadPriors(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("expected a two-state ensemble, got {0} states")]
    NotBinary(usize),

    #[error("invalid measurement: {0}")]
    InvalidPovm(String),

    #[error("outcome probability {value:e} for state {state} is negative beyond roundoff")]
    NegativeProbability { state: usize, value: f64 },

    #[error("solver did not converge after {} iterations (gap {:e})", .0.diagnostics.iterations, .0.diagnostics.gap)]
    NotConverged(Box<Solution>),
}
