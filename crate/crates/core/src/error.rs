//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Array shapes do not agree with the operator or with each other.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The line search halved the steplength more times than plausible for a
    /// correct gradient; almost always signals a gradient bug.
    #[error("backtracking exceeded {halvings} halvings at iteration {iteration} (gradient bug?)")]
    BacktrackingFailed { iteration: usize, halvings: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}
