use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("degenerate embedding: row {row} has norm {norm:e}")]
    DegenerateEmbedding { row: usize, norm: f64 },

    #[error("training diverged in block `{block}`{}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    TrainingDivergence {
        block: String,
        iteration: Option<usize>,
    },

    #[error("non-finite loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("gradient check aborted: {0}")]
    GradCheck(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("degenerate caption: {0}")]
    DegenerateCaption(String),

    #[error("vocabulary index {index} out of range for vocabulary of size {size}")]
    Vocabulary { index: usize, size: usize },

    #[error("unknown language `{0}`")]
    UnknownLanguage(String),

    #[error("at least two languages are required, got {0}")]
    InsufficientLanguages(usize),

    #[error("image `{image}` has no `{language}` caption")]
    MissingCaption { image: String, language: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: byte offset {offset}: {message}")]
    BinaryParse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("retrieval protocol violation: {0}")]
    Protocol(String),

    #[error("cannot aggregate reports: {0}")]
    Aggregation(String),

    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Usage/configuration problems map to exit code 2, everything else to 3.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse { .. }
                | Error::UnknownLanguage(_)
                | Error::InsufficientLanguages(_)
                | Error::Incompatible(_)
        )
    }
}
