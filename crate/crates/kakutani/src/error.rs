//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by library operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Both strings of an f̄ evaluation are empty, so the denominator vanishes.
    #[error("f-bar is undefined for two empty strings")]
    EmptyPair,
    /// A size cap was exceeded while generating or materializing data.
    #[error("budget exceeded: {what} needs {required} but the cap is {cap}")]
    Budget {
        what: String,
        required: u128,
        cap: u128,
    },
    /// A structural file (tree, stage manifest, action table, code) is malformed.
    #[error("malformed {kind}: {detail}")]
    Malformed { kind: &'static str, detail: String },
    /// An internal invariant failed; indicates a bug, never a user error.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
