use std::io;

use thiserror::Error;

/// Errors raised by every stage of the voxelization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a documented precondition (dimensions, divisibility,
    /// finiteness, parameter ranges).
    #[error("validation error: {0}")]
    Validation(String),

    /// A container does not start with the expected magic bytes or carries
    /// an unreadable header.
    #[error("format error: {0}")]
    Format(String),

    /// A container ended before its declared payload was complete.
    #[error("length error: {0}")]
    Length(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad user input rather than the environment.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
