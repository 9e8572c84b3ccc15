use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("design matrix is rank deficient for degree {degree}")]
    RankDeficient { degree: usize },

    #[error("force readings have zero variance")]
    ZeroVariance,

    #[error("angle {angle} deg outside calibrated range [{min}, {max}] deg")]
    OutOfRange { angle: f64, min: f64, max: f64 },

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("no polynomial degree could be fitted")]
    NoModel,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

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

    #[error("unknown object `{0}` referenced by experiment")]
    UnknownObject(String),

    #[error("experiment failed: {0}")]
    Experiment(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
