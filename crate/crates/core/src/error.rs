use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("diff parse error at line {line}: {message}")]
    DiffParse { line: usize, message: String },

    #[error("change has no hunks")]
    EmptyChange,

    #[error("attention over {queries} queries has a row with every key position masked")]
    AllKeysMasked { queries: usize },

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },

    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },

    #[error("embedding mismatch for change `{id}`: {message}")]
    EmbeddingMismatch { id: String, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("corrupted {what}: {message}")]
    Corrupted { what: &'static str, message: String },

    #[error("unsupported {what} version {found} (expected {expected})")]
    Version {
        what: &'static str,
        found: u32,
        expected: u32,
    },

    #[error("invalid corpus {path}: {message}")]
    Corpus { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("task mismatch: checkpoint is `{checkpoint}`, requested `{requested}`")]
    TaskMismatch { checkpoint: String, requested: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DiffParse { .. } => "diff_parse",
            Error::EmptyChange => "empty_change",
            Error::AllKeysMasked { .. } => "all_keys_masked",
            Error::TokenOutOfRange { .. } => "token_out_of_range",
            Error::NonFiniteGradient(_) => "non_finite_gradient",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::EmbeddingMismatch { .. } => "embedding_mismatch",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Corrupted { .. } => "corrupted",
            Error::Version { .. } => "version",
            Error::Corpus { .. } => "corpus",
            Error::Config(_) => "config",
            Error::Metric(_) => "metric",
            Error::TaskMismatch { .. } => "task_mismatch",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
