use thiserror::Error;

/// Errors raised by the library. Each variant names the object it concerns.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("zero polynomial has no Newton polygon")]
    ZeroPolynomial,
    #[error("polynomial has non-rational coefficients; take the characteristic polynomial after restriction of scalars first")]
    NonRationalCoefficients,
    #[error("expected constant term 1, found {0}")]
    NotFredholm(String),
    #[error("invalid character label {0:?}: {1}")]
    BadCharacter(String, String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("parity mismatch: {0}")]
    Parity(String),
    #[error("insufficient precision: need {need}, have {have}")]
    Precision { need: usize, have: usize },
    #[error("series is not in {space}: first failing exponent {exponent}")]
    NotMember { space: String, exponent: usize },
    #[error("dimension of {space} is {found} but the dimension formula gives {expected}")]
    OracleMismatch { space: String, expected: usize, found: usize },
    #[error("generators for {space} span only {found} of {expected} dimensions")]
    SpanDeficiency { space: String, expected: usize, found: usize },
    #[error("operators do not commute: {0}")]
    NonCommuting(String),
    #[error("eigen-splitting failed after {0} attempts")]
    SplittingFailed(usize),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
