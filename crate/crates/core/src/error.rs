use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported dimension n = {0} (sphere evaluation only exists for n = 2 and n = 3)")]
    UnsupportedDimension(usize),

    #[error("length mismatch in {context}: expected {expected}, found {found}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{needed} detectors needed for degree {l_max}, layout has {available}")]
    TooFewDetectors {
        l_max: usize,
        needed: usize,
        available: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("zero reference norm")]
    ZeroReference,

    #[error("decomposition does not match kernel or grid: {0}")]
    SpecMismatch(String),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("tolerance violated: {0}")]
    Tolerance(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
