use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("operator of size {size} exceeds the eigendecomposition cap of {cap}")]
    TooLargeForEigen { size: usize, cap: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("missing input file {0}")]
    MissingFile(PathBuf),

    #[error("{file}:{line}: ragged feature row (expected {expected} values, found {found})")]
    RaggedFeatures {
        file: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{file}:{line}: unknown node id `{id}`")]
    UnknownNode { file: PathBuf, line: usize, id: String },

    #[error("{file}:{line}: {msg}")]
    Parse { file: PathBuf, line: usize, msg: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(file: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }
}
