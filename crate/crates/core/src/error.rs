use thiserror::Error;

/// Errors raised by the collocation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("unsupported delay: {0}")]
    UnsupportedDelay(String),

    #[error("delay argument {x} lies outside the domain and no history function was supplied")]
    MissingHistory { x: f64 },

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("shift {0} coincides with an eigenvalue; perturb the shift")]
    ShiftCollision(f64),

    #[error("non-positive period iterate T = {0}")]
    NonPositivePeriod(f64),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
