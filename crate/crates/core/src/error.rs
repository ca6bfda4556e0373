use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate spatial response: {0}")]
    DegenerateResponse(String),

    #[error("azimuth undefined: {0}")]
    AzimuthUndefined(String),

    #[error("not identifiable: {0}")]
    Identifiability(String),

    #[error("degenerate ALS iteration: {0}")]
    DegenerateIteration(String),

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("rank deficient Fisher information: {detail}")]
    RankDeficient {
        detail: String,
        /// Parameter indices (in CRB ordering) carrying the null directions.
        null_directions: Vec<usize>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Stable machine-readable category, used by the CLI for error reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Shape(_) => "shape",
            Error::DegenerateResponse(_) => "degenerate-response",
            Error::AzimuthUndefined(_) => "azimuth-undefined",
            Error::Identifiability(_) => "identifiability",
            Error::DegenerateIteration(_) => "degenerate-iteration",
            Error::IllConditioned(_) => "ill-conditioned",
            Error::OutOfRange(_) => "out-of-range",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::Config(_) => "config",
            Error::Io { .. } | Error::Csv { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
