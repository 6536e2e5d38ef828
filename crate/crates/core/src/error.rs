use thiserror::Error;

/// Errors raised by constructors and operations on malformed input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
