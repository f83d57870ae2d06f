use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// The variants fall into two families that the command-line front end maps
/// onto distinct exit codes: configuration problems (bad names, bad layouts,
/// bad parameters) and data problems (non-finite values, shape mismatches,
/// malformed tensor files).
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown format `{name}`; available formats: {}", available.join(", "))]
    UnknownFormat { name: String, available: Vec<String> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("QSNR is undefined for an all-zero reference signal")]
    UndefinedQsnr,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("tensor file error at byte offset {offset}: {message}")]
    TensorFile { offset: u64, message: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// True for errors caused by invalid configuration rather than bad input data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::UnknownFormat { .. } | Error::Config(_))
    }

    /// Process exit status: 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_config() {
            2
        } else {
            1
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
