use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::Trait;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate username `{0}` in author profiles")]
    DuplicateUsername(String),
    #[error("unknown trait `{0}`")]
    UnknownTrait(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CohortError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
    #[error(
        "insufficient class for ({subreddit}, {trait_}): {n_true} true / {n_false} false, need {min_per_class} each"
    )]
    InsufficientClass {
        subreddit: String,
        trait_: Trait,
        n_true: usize,
        n_false: usize,
        min_per_class: usize,
    },
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("embedding file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("no embedding for comment `{0}`")]
    MissingId(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("invalid training data: {0}")]
    InvalidData(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature index {index} out of range for input of length {len}")]
    FeatureOutOfRange { index: usize, len: usize },
    #[error("non-finite loss at epoch {0}; lower the learning rate")]
    NonFiniteLoss(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no rows to report")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("results line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
}

/// Any failure from the audit pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
