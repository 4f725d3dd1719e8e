use std::path::PathBuf;

use holoext_core::{DomainError, ExtensionError, QuadratureError, VarietyError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report has no rows")]
    EmptyReport,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
