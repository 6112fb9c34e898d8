use thiserror::Error;

/// Unified error type for the whole crate.
///
/// The CLI maps these to exit code 2 (data/validation errors); usage errors
/// are caught by argument parsing before any of these can occur.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed JSON / JSONL / CSV content.
    #[error("parse: {0}")]
    Parse(String),

    /// Structural problems in a road network (dangling endpoint, no segments,
    /// unreachable pairs, ...).
    #[error("network: {0}")]
    Network(String),

    /// Problems in trajectory data that abort a run (nonexistent file level;
    /// per-line problems are rejected, not fatal).
    #[error("data: {0}")]
    Data(String),

    /// Violated precondition on an operation argument.
    #[error("invalid argument: {0}")]
    Arg(String),

    /// Binary/model file envelope problems: wrong magic, version, checksum.
    #[error("format: {0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
