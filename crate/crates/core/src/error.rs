use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("malformed metadata in {path}: {msg}")]
    Metadata { path: PathBuf, msg: String },

    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("non-finite value at object {row}, feature {col}")]
    NonFinite { row: usize, col: usize },

    #[error("negative value {value} at object {row}, feature {col} (pass allow-raw to rectify)")]
    Negative { row: usize, col: usize, value: f64 },

    #[error("duplicate object id {0:?}")]
    DuplicateId(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid triplet ({0}, {1}, {2}): {3}")]
    InvalidTriplet(usize, usize, usize, &'static str),

    #[error("requested {requested} distinct triplets but only {available} exist")]
    TooManyTriplets { requested: u128, available: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("training diverged at epoch {epoch}: {msg}")]
    Diverged { epoch: usize, msg: String },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::TooManyTriplets { .. } => ErrorKind::Usage,
            Error::Singular(_) | Error::ZeroVariance(_) | Error::Diverged { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
