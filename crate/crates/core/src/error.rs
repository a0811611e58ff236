use thiserror::Error;

use crate::means::MeanReport;

/// Errors raised by the matrix, estimation and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max deviation {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not positive definite: min eigenvalue {min_eigenvalue:e} <= {floor:e}")]
    NotPositiveDefinite { min_eigenvalue: f64, floor: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("snapshot lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("eigensolver did not converge")]
    ConvergenceFailure,

    #[error("matrix exponential overflows: largest eigenvalue {0}")]
    Overflow(f64),

    #[error("empty input")]
    EmptyInput,

    #[error("sample is identically zero")]
    DegenerateSample,

    #[error("non-finite value: {0}")]
    NonFinite(f64),

    #[error("divergence evaluated to {value:e}, below the round-off floor {floor:e}")]
    Inconsistent { value: f64, floor: f64 },

    #[error("no root: divergence stays below radius {radius} on the search range")]
    NoSolution { radius: f64 },

    #[error("no root: divergence stays above radius {radius} on the search range")]
    NonBracketable { radius: f64 },

    #[error("iteration limit {iterations} reached with residual {residual:e}")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        last: Box<MeanReport>,
    },

    #[error("{trials} trials at pfa {pfa} leave no exceedance to place the threshold")]
    InsufficientTrials { trials: usize, pfa: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation not defined for {0}")]
    UnsupportedKind(&'static str),

    #[error("trial {trial} of experiment {experiment} (seed {seed}) failed: {source}")]
    Trial {
        experiment: u64,
        trial: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
