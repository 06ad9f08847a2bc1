use thiserror::Error;

/// Errors raised by the library operations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A value does not fit the 64-bit integer width used for indices.
    #[error("integer range exceeded: {0}")]
    Range(String),

    /// An input violates an operation's precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An argument is outside the accepted domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An enumeration or truncation would exceed the configured budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error(transparent)]
    Dseq(#[from] crate::dseq::DseqError),
}

impl Error {
    /// Stable short code, used by the CLI when reporting failures.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Range(_) => "range",
            Error::Precondition(_) => "precondition",
            Error::Argument(_) => "argument",
            Error::Capacity(_) => "capacity",
            Error::Dseq(e) => e.code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
