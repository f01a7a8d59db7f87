use std::fmt::Display;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: requires {invariant} (got {value})")]
    InvalidParameter {
        name: String,
        invariant: String,
        value: String,
    },
    #[error("matrix is not Hermitian (relative deviation {0:e})")]
    NotHermitian(f64),
    #[error("singular construction: {0}")]
    Singular(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &str, invariant: &str, value: impl Display) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            invariant: invariant.to_string(),
            value: value.to_string(),
        }
    }

    /// Name of the violated invariant, when the error is a validation failure.
    pub fn invariant(&self) -> Option<&str> {
        match self {
            Error::InvalidParameter { invariant, .. } => Some(invariant),
            _ => None,
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidParameter { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, name: &str, invariant: &str, value: impl Display) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(name, invariant, value))
    }
}
