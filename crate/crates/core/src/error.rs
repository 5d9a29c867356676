use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("time grid spans {span_ns:.4} ns but at least {required_ns:.4} ns is needed")]
    Truncation { span_ns: f64, required_ns: f64 },

    #[error("profiles cannot be compared on a common grid: {0}")]
    GridMismatch(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("jacobian is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("under-determined fit: {0}")]
    UnderDetermined(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
