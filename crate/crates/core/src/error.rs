use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown builtin objective `{name}` (available: {available})")]
    UnknownObjective { name: String, available: String },

    #[error("non-finite value in layer {layer}")]
    NonFinite { layer: usize },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("malformed weight file: {0}")]
    WeightFormat(String),

    #[error("width chain violated at layer {layer}: {detail}")]
    WidthChain { layer: usize, detail: String },

    #[error("grid of {requested} points exceeds the budget of {budget}; use fewer points per dimension")]
    GridBudget { requested: u128, budget: u128 },

    #[error("malformed dataset: {0}")]
    Dataset(String),

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

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidDomain(_)
                | Error::InvalidConfig(_)
                | Error::UnknownObjective { .. }
                | Error::GridBudget { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
