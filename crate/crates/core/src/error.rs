use thiserror::Error;

/// Errors raised by the library.
///
/// The variants separate malformed input from requests that are well formed
/// but fall outside the regime where a result is known to hold, so that
/// front-ends can report them differently.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A closed form or estimator was requested outside the range of `n`
    /// (or of a parameter) for which it is valid.
    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient sample: need n >= {required}, got n = {actual}")]
    InsufficientSample { required: u64, actual: u64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn regime(msg: impl Into<String>) -> Error {
    Error::OutOfRegime(msg.into())
}
