use std::path::PathBuf;

/// Errors produced by the detection library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of its legal range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input (feature vector, trace, sample) does not meet the call's contract.
    #[error("invalid input: {0}")]
    Input(String),

    /// A file could not be parsed as the expected format.
    #[error("cannot ingest {path}: {reason}")]
    Ingest { path: PathBuf, reason: String },

    /// An I/O operation failed.
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
