use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot ingest {}: {message}", file.display())]
    Ingestion { file: PathBuf, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] dwr_core::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration, 3 for file input/output,
    /// 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Ingestion { .. } | HarnessError::Io { .. } => 3,
            HarnessError::Numerical(_) => 4,
            HarnessError::Core(e) => match e {
                dwr_core::Error::Csv(_)
                | dwr_core::Error::Io(_)
                | dwr_core::Error::Json(_)
                | dwr_core::Error::Column { .. } => 3,
                dwr_core::Error::InvalidInput(_) => 2,
                _ => 4,
            },
        }
    }

    pub fn ingestion(file: impl Into<PathBuf>, err: dwr_core::Error) -> Self {
        HarnessError::Ingestion {
            file: file.into(),
            message: err.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
