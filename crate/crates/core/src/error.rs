use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// Malformed binary or text input. `offset` is a byte offset for binary
    /// files and a line number for text sidecars.
    #[error("format error at offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("invalid {what}: {reason}")]
    Invariant { what: &'static str, reason: String },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("parameter error: {0}")]
    Param(String),

    #[error("frame warp did not converge (last update {0:.3} samples)")]
    WarpDiverged(f64),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invariant(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invariant {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}
