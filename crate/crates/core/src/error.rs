use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid {field}: {reason}")]
    InvalidInput { field: String, reason: String },

    /// A file or config parsed but failed validation, or did not parse.
    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },

    /// Mathematical domain violation, e.g. a zero distance raised to a negative power.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("size guard exceeded for {what}: estimated {estimate} units, limit {limit}")]
    GuardExceeded {
        what: String,
        estimate: f64,
        limit: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad configuration or input rather than by the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput { .. } | Error::Parse { .. } | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
