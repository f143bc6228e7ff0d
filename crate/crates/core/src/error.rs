use thiserror::Error;

/// Errors raised by the verification pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An evaluation point lies outside a tabulated or admissible range.
    #[error("range error: {0}")]
    Range(String),
    /// An iterative method did not reach its target accuracy.
    #[error("numerical error: {message} (achieved {achieved:.3e})")]
    Numerical { message: String, achieved: f64 },
    /// The triangulation is malformed or contains degenerate cells.
    #[error("mesh error: {0}")]
    Mesh(String),
    /// A hypothesis of the checked statement does not hold on the input.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A configuration or data document failed validation.
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, achieved: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            achieved,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
