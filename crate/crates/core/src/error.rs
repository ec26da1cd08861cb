use std::path::PathBuf;

use crate::data::Modality;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite numeric input at position {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid target {value} for binary cross-entropy (must be 0 or 1)")]
    InvalidBinaryTarget { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("stale trace: {0}")]
    StaleTrace(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("duplicate key `{key}` in {modality} frame")]
    DuplicateKey { modality: Modality, key: String },

    #[error("no usable rows in {0}")]
    EmptyResult(String),

    #[error("empty intersection: no key is reported by every modality")]
    EmptyIntersection,

    #[error("split error: {0}")]
    Split(String),

    #[error("missing modality block: {0}")]
    MissingModality(Modality),

    #[error("probability {value} outside [0, 1] from {modality} model")]
    ProbabilityOutOfRange { modality: Modality, value: f64 },

    #[error("missing NASA-TLX targets")]
    MissingTlxTargets,

    #[error("undefined ROC: labels contain a single class")]
    UndefinedRoc,

    #[error("non-binary value {0} where a 0/1 label was expected")]
    NonBinary(f64),

    #[error("timeline error: {0}")]
    Timeline(String),

    #[error("bundle mismatch: {0}")]
    BundleMismatch(String),

    /// An error from one named stage of a multi-stage workflow.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::CorruptFile {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

/// Tags an error with the workflow stage that produced it.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            tagged @ Error::Stage { .. } => tagged,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        })
    }
}
