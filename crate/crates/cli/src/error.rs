use std::path::PathBuf;

use causal_pat::PatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: line {line}: {message}")]
    ConfigLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Numeric {
        context: &'static str,
        source: PatError,
    },

    #[error("check failed: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::ConfigLine { .. } | CliError::Format { .. } => 2,
            CliError::Io { .. } => 2,
            CliError::Numeric { .. } => 3,
            CliError::Acceptance(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a pipeline stage to core errors.
pub trait Context<T> {
    fn context(self, context: &'static str) -> CliResult<T>;
}

impl<T> Context<T> for causal_pat::Result<T> {
    fn context(self, context: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Numeric { context, source })
    }
}
