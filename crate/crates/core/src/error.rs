use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix has a negative eigenvalue {value:.3e}")]
    NegativeEigenvalue { value: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("input states are not orthogonal (|<psi0|psi1>| = {overlap:.3e})")]
    NotOrthogonal { overlap: f64 },

    #[error("expected {expected} generator parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("invalid amplitudes: {0}")]
    InvalidAmplitudes(String),

    #[error("repeatability check needs a pure apparatus state (purity {purity:.6})")]
    MixedApparatusState { purity: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
