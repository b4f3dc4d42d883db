use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {field}: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: tempus_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{failed} of {total} criteria failed")]
    SuiteFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::ConfigInvalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches context to module errors.
pub trait Context<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T> Context<T> for tempus_core::Result<T> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|source| CliError::Module {
            context: what.to_string(),
            source,
        })
    }
}
