use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the drought analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("value out of range at data row {row}: {message}")]
    Range { row: usize, message: String },

    #[error("gap in series {key}: first missing hour is {hour}")]
    Gap { key: String, hour: usize },

    #[error("duplicate entry for {key} at {at}")]
    Duplicate { key: String, at: String },

    #[error("invalid time axis: {0}")]
    Axis(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("composite {0} has no member with positive capacity")]
    EmptyComposite(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
