use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    /// Parameter outside the domain of a formula or operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value does not fit the register it is destined for.
    #[error("overflow: {0}")]
    Overflow(String),

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("circuit parse error on line {line}: {msg}")]
    CircuitParse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn overflow(msg: impl Into<String>) -> Self {
        Error::Overflow(msg.into())
    }

    pub(crate) fn circuit(msg: impl Into<String>) -> Self {
        Error::Circuit(msg.into())
    }
}
