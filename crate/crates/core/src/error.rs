use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("capacity exceeded: dimension {dim} is above the dense limit {limit}")]
    Capacity { dim: usize, limit: usize },

    #[error("local dimension {0} is not supported here (qubits only)")]
    UnsupportedDimension(usize),

    #[error("reduced data is not permutationally invariant: {0}")]
    NotPermutationInvariant(String),

    #[error("cannot parse state spec `{spec}`: {reason}")]
    StateSpec { spec: String, reason: String },

    #[error("output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;
