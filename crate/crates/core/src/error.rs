use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input violates a mathematical precondition (negative values,
    /// non-concave profile, non-monotone density, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A scalar argument is out of range.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Text input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
