use std::path::PathBuf;

use crate::scenario::Hypothesis;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("rank {rank} is out of range for {n} array elements")]
    RankOutOfRange { rank: usize, n: usize },

    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("noise power estimate is zero (rank {rank}, {samples} clutter-free samples)")]
    DegenerateNoise { rank: usize, samples: usize },

    #[error("insufficient training data: {0}")]
    InsufficientTraining(String),

    #[error("hypothesis {hypothesis:?} does not match the scenario: {reason}")]
    HypothesisMismatch {
        hypothesis: Hypothesis,
        reason: &'static str,
    },

    #[error("non-finite value in sparse recovery at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("{trials} trials cannot resolve a false-alarm probability of {pfa}")]
    TooFewTrials { trials: usize, pfa: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
