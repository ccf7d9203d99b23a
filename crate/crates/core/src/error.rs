use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error category, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input file, bad config, unreadable path.
    Input,
    /// A model could not be trained because its preconditions failed.
    Training,
    /// Serialized model artifacts are corrupted or inconsistent.
    Integrity,
    /// Gold and predicted rows do not line up.
    Alignment,
    /// Anything else (translation service down, external adapter failure...).
    Other,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("unknown label '{value}' at line {line}")]
    UnknownLabel { value: String, line: usize },

    #[error("example '{id}' has no label")]
    Unlabeled { id: String },

    #[error("duplicate id '{id}' in dataset '{dataset}'")]
    DuplicateId { id: String, dataset: String },

    #[error("invalid example '{id}': {message}")]
    InvalidExample { id: String, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("training requires at least 2 distinct classes, found {found}")]
    SingleClass { found: usize },

    #[error("single-class stage {stage}: found {found} distinct class(es)")]
    SingleClassStage { stage: u8, found: usize },

    #[error("no violent examples")]
    NoViolentExamples,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {label} is not in the class set {classes:?}")]
    UnknownClass { label: i64, classes: Vec<u8> },

    #[error("translation of '{id}' failed: {message}")]
    Translation { id: String, message: String },

    #[error("external classifier: {0}")]
    External(String),

    #[error("model integrity: {0}")]
    Integrity(String),

    #[error("alignment: {0}")]
    Alignment(String),

    #[error("nothing to report: {0}")]
    EmptyReport(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. }
            | Error::MalformedRow { .. }
            | Error::UnknownLabel { .. }
            | Error::Unlabeled { .. }
            | Error::DuplicateId { .. }
            | Error::InvalidExample { .. }
            | Error::InvalidConfig(_)
            | Error::Json(_) => ErrorCategory::Input,
            Error::EmptyCorpus
            | Error::EmptyVocabulary
            | Error::SingleClass { .. }
            | Error::SingleClassStage { .. }
            | Error::NoViolentExamples
            | Error::DimensionMismatch { .. } => ErrorCategory::Training,
            Error::Integrity(_) => ErrorCategory::Integrity,
            Error::Alignment(_) | Error::LengthMismatch { .. } | Error::UnknownClass { .. } => {
                ErrorCategory::Alignment
            }
            Error::Translation { .. } | Error::External(_) | Error::EmptyReport(_) => {
                ErrorCategory::Other
            }
        }
    }
}
