use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entries must all be finite")]
    NonFiniteEntries,
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {got}")]
    BadEntryCount { dim: usize, expected: usize, got: usize },
    #[error("matrix dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("exterior power order {order} out of range 1..={dim}")]
    ExteriorOrderOutOfRange { order: usize, dim: usize },
    #[error("matrix norm {norm:.3e} exceeds the exponential accuracy budget (cap {cap:.1})")]
    ExpNormTooLarge { norm: f64, cap: f64 },
    #[error("constraint entries must be 0 or 1")]
    BadConstraintEntry,
    #[error("constraint must be square and nonempty: {0}")]
    BadConstraintShape(String),
    #[error("symbol {symbol} out of range 1..={k}")]
    SymbolOutOfRange { symbol: usize, k: usize },
    #[error("no admissible bi-infinite sequences: trimming removed every symbol")]
    EmptyAfterTrim,
    #[error("constraint size {constraint_k} does not match family size {family_k}")]
    ConstraintSizeMismatch { constraint_k: usize, family_k: usize },
    #[error("transition matrix is not row-stochastic: {0}")]
    NotStochastic(String),
    #[error("Markov model incompatible with the matrix family: {0}")]
    IncompatibleModel(String),
    #[error("continued-fraction coefficients exhausted after {produced} convergents (requested {requested})")]
    CoefficientsExhausted { produced: usize, requested: usize },
    #[error("continued-fraction recurrence overflowed 64-bit integers")]
    ConvergentOverflow,
    #[error("invalid subdivision: {0}")]
    BadSubdivision(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
