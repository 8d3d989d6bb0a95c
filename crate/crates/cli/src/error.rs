use std::io;
use std::path::PathBuf;

use kmoco_core::Error as CoreError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Io = 2,
    Numeric = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    /// Optimization stopped on non-finite values or divergence.
    #[error("{reason}; last good parameters written to {}", checkpoint.display())]
    Aborted { reason: CoreError, checkpoint: PathBuf },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Self::Format { path: path.into(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::Usage,
            Self::Io { .. } | Self::Format { .. } => ExitCode::Io,
            Self::Core(CoreError::Numeric(_)) | Self::Aborted { .. } => ExitCode::Numeric,
            Self::Core(_) => ExitCode::Usage,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
