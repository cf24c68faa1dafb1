use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("column descriptor: {0}")]
    Descriptor(String),

    #[error("{path}:{line}: expected {expected} columns, found {found}")]
    ColumnCount {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}:{line}: non-numeric token {token:?} in column {column}")]
    NonNumeric {
        path: PathBuf,
        line: usize,
        column: usize,
        token: String,
    },

    #[error("labels must be 0/1 for Logloss (row {row} has label {value})")]
    LabelNotBinary { row: usize, value: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("bad magic bytes, not a model file")]
    BadMagic,

    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated model file, checksum cannot be verified")]
    Truncated,

    #[error("checksum mismatch, model file is corrupted")]
    Checksum,

    #[error("malformed model: {0}")]
    Malformed(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("empty input")]
    EmptyInput,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
