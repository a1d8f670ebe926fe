use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimension(String),

    #[error("two-qubit decomposition failed: {0}")]
    Decomposition(String),

    #[error("bitstring length {found} does not match register of {expected} qubits")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid bitstring {0:?}")]
    InvalidBitString(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("{n} qubits exceeds the simulator capacity of {max} qubits")]
    Capacity { n: usize, max: usize },

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("nothing to optimize: circuit has no peaking layers")]
    NothingToOptimize,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix domains differ: {0}")]
    DomainMismatch(String),

    #[error("no circuit for grid cell (n={n}, d={d})")]
    MissingCell { n: usize, d: usize },

    #[error("circuit file for cell (n={n}, d={d}) at {path}: {message}")]
    CellFile {
        n: usize,
        d: usize,
        path: PathBuf,
        message: String,
    },

    #[error("profile does not belong to circuit (n={n}, d={d}): {reason}")]
    ProfileMismatch { n: usize, d: usize, reason: String },

    #[error("{path}: schema version {found}, expected {expected}")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
