use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("node index {index} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { index: usize, num_nodes: usize },

    #[error("empty remaining set: {0}")]
    EmptyRemaining(String),

    #[error("training diverged at epoch {epoch}: objective is {value}")]
    Divergence { epoch: usize, value: f64 },

    #[error("unsupported loss kind for {operation}: {loss}")]
    Unsupported { operation: String, loss: String },

    #[error("capacitance matrix singular (min eigenvalue {min_eigenvalue:e}); deleted rows exhaust a span direction")]
    CapacitanceSingular { min_eigenvalue: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("graph with {num_nodes} nodes exceeds the dense-power limit of {limit} nodes")]
    TooLarge { num_nodes: usize, limit: usize },

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
