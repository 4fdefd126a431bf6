use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: unsupported construct: {what}")]
    Unsupported { line: usize, what: String },

    #[error("incomparable input: {0}")]
    Incomparable(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("training aborted: {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot load {}: {msg}", file.display())]
    Load { file: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn load(file: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Load {
            file: file.into(),
            msg: msg.into(),
        }
    }

    /// Errors caused by the input data rather than by how the program was invoked.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Config(_))
    }
}
