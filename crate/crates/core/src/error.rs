use thiserror::Error;

/// Errors raised while building spaces, kernels, and scenarios.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("breakpoints must be strictly ascending and cover [0, 1]")]
    Breakpoints,

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("kernel is singular on an included pair ({x}, {y})")]
    SingularPair { x: usize, y: usize },

    #[error("missing data: {0}")]
    MissingData(&'static str),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("grid under-resolved: {reason}; need at least {required} cells")]
    Resolution { reason: String, required: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
