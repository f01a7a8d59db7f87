use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{name}`: requires {invariant} (got {value})")]
    Validation {
        name: String,
        invariant: String,
        value: String,
    },
    #[error("compute failure: {0}")]
    Compute(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn validation(name: &str, invariant: &str, value: impl ToString) -> Self {
        CliError::Validation {
            name: name.to_string(),
            invariant: invariant.to_string(),
            value: value.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Validation { name, invariant, value } => json!({
                "status": "validation_error",
                "name": name,
                "invariant": invariant,
                "value": value,
                "message": self.to_string(),
            }),
            _ => json!({"status": "compute_error", "message": self.to_string()}),
        }
    }
}

impl From<oscilab::Error> for CliError {
    fn from(e: oscilab::Error) -> Self {
        match e {
            oscilab::Error::InvalidParameter { name, invariant, value } => CliError::Validation { name, invariant, value },
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}
