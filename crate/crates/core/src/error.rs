use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("rank-one downdate would break positive definiteness at index {index}")]
    DowndateBreaksPD { index: usize },

    #[error("power iteration did not converge after {iterations} iterations (best estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {row} is constant and cannot be standardized")]
    ConstantRow { row: usize },

    #[error("unknown cluster label {0}")]
    UnknownLabel(usize),

    #[error("cannot merge cluster {0} with itself")]
    SameLabel(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("ragged rows: row {row} has {got} fields, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures that originate in numerical evaluation rather than
    /// configuration or I/O.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::DowndateBreaksPD { .. }
                | Error::NoConvergence { .. }
                | Error::Domain(_)
                | Error::ConstantRow { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
