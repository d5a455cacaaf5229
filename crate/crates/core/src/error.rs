use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("node {0} cannot measure itself")]
    SelfMeasurement(usize),

    #[error("node {node} out of range for a network of {count} nodes")]
    NodeOutOfRange { node: usize, count: usize },

    #[error("covariance [[{xx}, {xy}], [{xy}, {yy}]] is not positive semidefinite")]
    NotPositiveSemidefinite { xx: f64, xy: f64, yy: f64 },

    #[error("covariance matrix is not symmetric")]
    AsymmetricCovariance,

    #[error("invalid ranging parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("belief mass underflowed to {0:e} after an update")]
    Underflow(f64),

    #[error("cannot summarize an empty list of measurement matrices")]
    EmptyInput,

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }

    /// Whether this came from bad configuration rather than the filesystem.
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Csv { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
