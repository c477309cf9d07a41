use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("degenerate bounding box: {0}")]
    DegenerateBbox(String),

    #[error("trajectory frame {frame} leaves the cone on {parameter} (value {value})")]
    Generation {
        frame: usize,
        parameter: String,
        value: f64,
    },

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("split integrity error: image ids shared between splits: {0:?}")]
    SplitIntegrity(Vec<String>),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
