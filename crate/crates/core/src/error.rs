use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),

    #[error("zero-dimensional input")]
    Empty,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid Pauli string: {0}")]
    InvalidPauli(String),

    #[error("stabilizer generators {0} and {1} do not commute")]
    NonCommuting(usize, usize),

    #[error("stabilizer generators are not independent")]
    DependentGenerators,

    #[error("numerical consistency failure: {0}")]
    NumericalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
