use thiserror::Error;

/// Errors raised by the detection pipeline and experiment engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sequence has zero energy")]
    ZeroEnergy,

    #[error("matrix is indefinite beyond the jitter cap (pivot {pivot:.3e} at row {row})")]
    NotPositiveSemidefinite { row: usize, pivot: f64 },

    #[error("eigenvalue iteration did not converge after {0} steps")]
    EigenNoConvergence(usize),

    #[error("detector requires a constant-modulus constellation")]
    NonConstantModulus,

    #[error("exhaustive search over {0} sequences exceeds the size guard")]
    SearchSpaceTooLarge(u128),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("zero channel estimate")]
    ZeroChannel,

    #[error("singular linear system")]
    Singular,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
