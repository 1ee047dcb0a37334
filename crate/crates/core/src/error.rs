use std::io;

use thiserror::Error;

/// Errors raised by the simulator and receiver DSP.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A configuration is inconsistent or cannot be resolved.
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical integration or solve failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Object used in the wrong state (e.g. untrained equalizer).
    #[error("state error: {0}")]
    State(String),

    /// A file could not be parsed.
    #[error("malformed input at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
