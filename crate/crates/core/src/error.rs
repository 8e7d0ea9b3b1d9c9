use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent with another.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Arguments violate an operation's precondition (shape, sign, task).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Cholesky factorization failed even at the largest allowed jitter.
    #[error("matrix of size {size} not positive definite after jitter escalation up to {max_jitter:e} (min diagonal {min_diag:e})")]
    NotPositiveDefinite {
        size: usize,
        max_jitter: f64,
        min_diag: f64,
    },

    #[error("non-finite ELBO at iteration {iteration}")]
    NonFiniteElbo {
        iteration: usize,
        /// Flattened unconstrained parameters at the failing iteration.
        snapshot: Vec<f64>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    /// Structurally valid file whose contents violate the expected schema.
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. } | Error::NonFiniteElbo { .. }
        )
    }
}
