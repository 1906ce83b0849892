use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] mtggm::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (kind, path, line, column) = match self {
            Self::Io { path, .. } => ("io", Some(path), None, None),
            Self::Parse { path, line, column, .. } => ("parse", Some(path), Some(*line), Some(*column)),
            Self::Invalid { path, .. } => ("validation", Some(path), None, None),
            Self::Config(_) => ("config", None, None, None),
            Self::Model(_) => ("model", None, None, None),
        };
        ErrorRecord {
            kind: kind.to_string(),
            message: self.to_string(),
            path: path.map(|p| p.display().to_string()),
            line,
            column,
        }
    }
}

/// Machine-readable form of a failure, printed as JSON on stderr and
/// embedded in manifests of failed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

pub type Result<T> = std::result::Result<T, HarnessError>;
