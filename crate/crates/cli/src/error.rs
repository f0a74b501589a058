use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A key of the experiment configuration is missing, malformed or out of range.
    #[error("configuration error in `{key}`: {message}")]
    Config { key: &'static str, message: String },
    #[error(transparent)]
    Toolkit(#[from] fbmbt::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn is_config(&self) -> bool {
        matches!(self, CliError::Config { .. })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
