use std::path::{Path, PathBuf};

use thiserror::Error;

/// Command-line failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{field}: {message}")]
    Config { field: String, message: String },
    #[error("{field}: {message}")]
    Infeasible { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn infeasible(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Infeasible {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn with_field(self, field: &str) -> Self {
        match self {
            CliError::Config { message, .. } => CliError::config(field, message),
            CliError::Infeasible { message, .. } => CliError::infeasible(field, message),
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Infeasible { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<debias::Error> for CliError {
    fn from(e: debias::Error) -> Self {
        use debias::Error as E;
        match e {
            E::InvalidArgument { name, reason } => CliError::config(name, reason),
            E::DivergentCost(_) | E::InfeasibleLaw(_) => CliError::infeasible("p", e.to_string()),
            E::InfeasibleBudget(_) | E::DegenerateDesign(_) => {
                CliError::infeasible("budget", e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}
