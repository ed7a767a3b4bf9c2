use std::path::PathBuf;

use thiserror::Error;

use crate::hypercore::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(ValidationReport),

    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite values produced by {0}")]
    NonFinite(&'static str),

    #[error("isolated vertex with no self-loop: {0}")]
    IsolatedVertex(usize),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {class} has {have} members, {need} required")]
    InsufficientClass {
        class: usize,
        have: usize,
        need: usize,
    },

    #[error("instance too large for exhaustive search: C({n},{k}) exceeds {limit}")]
    TooLarge { n: usize, k: usize, limit: u64 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Data { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied data rather than programming errors.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidHypergraph(_)
                | Error::Parse { .. }
                | Error::Data { .. }
                | Error::Io { .. }
                | Error::Json(_)
                | Error::InsufficientClass { .. }
                | Error::IsolatedVertex(_)
                | Error::TooLarge { .. }
        )
    }
}
