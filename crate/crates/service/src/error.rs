use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures that abort a pipeline run.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("writing {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        RunError::Input { path: path.to_path_buf(), message: message.into() }
    }

    pub fn output(path: &Path, source: std::io::Error) -> Self {
        RunError::Output { path: path.to_path_buf(), source }
    }

    /// Process exit status: 2 for unusable inputs, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Input { .. } => 2,
            RunError::Output { .. } => 1,
        }
    }
}
