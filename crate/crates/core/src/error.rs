use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// The CLI maps variants onto exit codes through [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty point set")]
    EmptySet,

    #[error("point set contains the duplicate point {0:?}")]
    DuplicatePoint(Vec<f64>),

    #[error("non-finite coordinate in point {0:?}")]
    NonFinite(Vec<f64>),

    #[error("multi-index {alpha:?} exceeds order {order}")]
    OrderTooHigh { alpha: Vec<u8>, order: usize },

    #[error("point {0:?} lies in the unresolved collar (distance to E = {1:e})")]
    Collar(Vec<f64>, f64),

    #[error("window does not contain the point set")]
    WindowTooSmall,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) | Error::Collar(..) | Error::Quadrature(_) => 3,
            Error::Capacity(_) => 4,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
