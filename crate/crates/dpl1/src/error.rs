use std::fmt::Display;
use std::path::Path;

/// Failure of a CLI command. Each variant maps to one process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Capacity(String),

    #[error("{0}")]
    AuditFailed(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::AuditFailed(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    /// Wraps a core error, prefixing the config location it came from.
    pub fn core(context: &str, e: dpl1_core::Error) -> Self {
        match e {
            dpl1_core::Error::Capacity { .. } => CliError::Capacity(format!("{context}: {e}")),
            _ => CliError::Validation(format!("{context}: {e}")),
        }
    }

    pub fn io(path: &Path, e: impl Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
