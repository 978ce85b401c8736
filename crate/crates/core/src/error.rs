use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("chaos basis of {requested} indices exceeds the cap of {cap}")]
    Sizing { requested: u128, cap: usize },

    #[error("degree {degree} exceeds the maximum supported degree {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    SpecMismatch(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
