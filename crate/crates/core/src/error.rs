use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step size h = {h} is outside the stability interval of the scheme")]
    OutOfStability { h: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("row {row} has {found} fields, expected {expected}")]
    RowWidth {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("trace format: {0}")]
    TraceFormat(String),

    #[error("burn-in produced no accepted proposals; adaptation statistics are undefined")]
    NoAcceptance,

    #[error("adaptive 2-stage selection aborted: dimensionless step {h_bar} >= 4")]
    AiaAbort { h_bar: f64 },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
