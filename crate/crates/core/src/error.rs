use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("not in space: {0}")]
    NotInSpace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn invalid_data<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidData(msg.into()))
}
