use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("CSV error: {0}")]
    CsvData(#[from] csv::Error),

    #[error("I/O error: {0}")]
    IoData(#[from] std::io::Error),

    #[error("unrecognized country code {0:?}")]
    InvalidCountry(String),

    #[error("malformed record in {path} at line {line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("need at least {needed} paired observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("need at least {needed} groups for {side}, got {got}")]
    InsufficientGroups {
        side: String,
        needed: usize,
        got: usize,
    },

    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing {artifact} at {path}; run `{command}` first")]
    MissingArtifact {
        artifact: String,
        path: PathBuf,
        command: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
