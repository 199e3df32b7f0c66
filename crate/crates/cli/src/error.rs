use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or missing configuration; reported before any work starts.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] bidibeam::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("{path}:{line}: {message}")]
    Data { path: String, line: usize, message: String },

    /// Missing or inconsistent input produced by an earlier command.
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 1 for configuration problems, 2 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            _ => 2,
        }
    }
}
