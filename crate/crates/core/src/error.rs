use thiserror::Error;

/// Errors raised by the selection library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Data failed validation (non-binary response, constant column, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The log-density is minus infinity at the requested point.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine could not produce a trustworthy result.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
