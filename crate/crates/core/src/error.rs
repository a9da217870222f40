use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("HTTP request for {url} failed with status {status}")]
    Http { url: String, status: u16 },

    #[error("network error fetching {url}: {message}")]
    Network { url: String, message: String },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("evaluation timed out")]
    Timeout,

    #[error("registry error: {0}")]
    Registry(String),

    #[error("template error: {0}")]
    Template(String),

    #[error("invalid pipeline at {path}: {message}")]
    Validation { path: String, message: String },

    #[error("pipeline fit failed at node {path}: {source}")]
    PipelineFit {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error("import error at line {line}, column {column}: {message}")]
    Import {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported format version: {0}")]
    Version(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed result file {path}: {message}")]
    ResultFile { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
