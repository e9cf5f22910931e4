use std::path::PathBuf;

use crisisnews_core::annotation::AnnotationError;
use crisisnews_core::classifier::ClassifierError;
use crisisnews_core::corpus::CorpusError;
use crisisnews_core::embeddings::EmbeddingError;
use crisisnews_core::stats::StatsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("invalid config:\n  - {}", .0.join("\n  - "))]
    InvalidConfig(Vec<String>),
    #[error("stage `{stage}` needs the output of stage `{required}`, which is missing; run `crisisnews stage {required}` first")]
    MissingUpstream { stage: String, required: String },
    #[error("output of stage `{required}` is stale or modified ({reason}); rerun `crisisnews stage {required}` before `{stage}`")]
    StaleUpstream { stage: String, required: String, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    /// 1 for command-line and configuration problems, 2 for everything the
    /// data or the stage outputs caused.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) | PipelineError::Config { .. } | PipelineError::InvalidConfig(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
