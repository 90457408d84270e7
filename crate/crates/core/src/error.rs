use thiserror::Error;

/// Errors produced by dataset validation, model construction, and sampling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("invalid field `{field}`{}: {msg}", id.as_ref().map(|i| format!(" (study `{i}`)")).unwrap_or_default())]
    InvalidField {
        field: &'static str,
        id: Option<String>,
        msg: String,
    },

    #[error("duplicate study id `{0}`")]
    DuplicateId(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{0}")]
    Incompatible(String),

    #[error("kernel matrix is not positive definite after jitter")]
    KernelNotPositiveDefinite,

    #[error("sampler: {0}")]
    Sampler(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(field: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidField {
            field,
            id: None,
            msg: msg.into(),
        }
    }

    pub fn invalid_for(field: &'static str, id: &str, msg: impl Into<String>) -> Self {
        Error::InvalidField {
            field,
            id: Some(id.to_string()),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
