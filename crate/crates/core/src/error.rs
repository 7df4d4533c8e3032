use thiserror::Error;

/// Errors surfaced by the statistical and pipeline layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("quantile fraction {0} outside [0, 1]")]
    BadFraction(f64),

    #[error("no ancestor")]
    NoAncestor,

    #[error("posterior requires at least one observation")]
    NoObservations,

    #[error("ill-posed, set λ>0")]
    IllPosed,

    #[error("unseen feature level: {0}")]
    UnseenFeatureLevel(String),

    #[error("no cohorts in segment {0}")]
    EmptySegment(String),

    #[error("invalid cohort key {0:?}: {1}")]
    BadKey(String, String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Input {
            path: path.into(),
            message: message.into(),
        }
    }
}
