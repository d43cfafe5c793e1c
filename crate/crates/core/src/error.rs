use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {what} needs {required} entries, budget is {budget}")]
    ResourceLimit {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    #[error("infeasible compression: n={n}, depth={depth}, target m*={target} is below the minimum {minimum}")]
    InfeasibleCompression {
        n: usize,
        depth: usize,
        target: usize,
        minimum: usize,
    },

    #[error("numeric failure at {location}{}", step.map(|s| format!(" (training step {s})")).unwrap_or_default())]
    NumericFailure {
        location: String,
        step: Option<usize>,
    },

    #[error("cache integrity: {0}")]
    CacheIntegrity(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(location: impl Into<String>) -> Self {
        Error::NumericFailure {
            location: location.into(),
            step: None,
        }
    }
}
