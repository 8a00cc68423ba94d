use thiserror::Error;

use crate::spectral::SpectralReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has no entries")]
    EmptyMatrix,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input contains NaN or infinite entries")]
    NonFiniteInput,

    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),

    #[error("{0} must be positive and finite, got {1}")]
    BadParameter(&'static str, f64),

    #[error("Schur iteration did not converge")]
    NoConvergence,

    #[error("matrix is not real diagonalisable ({})", .0.failure_kind)]
    NotDiagonalisable(Box<SpectralReport>),

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("eigenvector matrix too ill-conditioned (cond {0:e}) for a positive definite Onsager operator")]
    IllConditioned(f64),

    #[error("operator does not satisfy A = -K B (relative residual {0:e})")]
    FlowMismatch(f64),

    #[error("similarity-transformed operator is not symmetric (relative asymmetry {0:e})")]
    AsymmetryDefect(f64),

    #[error("gradient at the claimed equilibrium does not vanish (norm {0:e})")]
    NotCritical(f64),

    #[error("dissipation potential has nonzero gradient at zero force (norm {0:e})")]
    DissipationNotCentred(f64),

    #[error("exponential overflow: t*f = {0} exceeds the guard of 700")]
    Overflow(f64),

    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),

    #[error("minimizing-movement step with tau = {0} has no unique minimizer")]
    SingularStep(f64),

    #[error("negative jump rate {rate} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, rate: f64 },

    #[error("column {col} sums to {sum}, not zero")]
    ColumnSumNonzero { col: usize, sum: f64 },

    #[error("generator kernel has dimension {0}, expected 1")]
    DegenerateKernel(usize),

    #[error("kernel vector of the generator has non-positive entries")]
    NonPositive,

    #[error("chain violates detailed balance (max defect {0:e})")]
    NotReversible(f64),

    #[error("argument must be strictly positive, got {0}")]
    NonPositiveInput(f64),
}
