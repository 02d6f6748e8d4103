use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single row-level validation failure found while loading a CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// Zero-based index of the data record (the header is not counted).
    pub row: usize,
    pub column: String,
    pub value: String,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "row {} column '{}': {} (value {:?})",
            self.row, self.column, self.reason, self.value
        )
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("missing column '{0}' in CSV header")]
    MissingColumn(String),
    #[error("{} invalid row(s); first: {}", .0.len(), .0[0])]
    Rows(Vec<RowError>),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum ArtifactError {
    #[error("not an artifact file (bad magic tag)")]
    BadMagic,
    #[error("format version {found} is not supported (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("file is truncated")]
    Truncated,
    #[error("fingerprint mismatch: stored {stored}, recomputed {computed}")]
    Fingerprint { stored: String, computed: String },
    #[error("corrupt artifact: {0}")]
    Corrupt(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    Convergence { iterations: usize, grad_norm: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("ambiguous one-hot block for variable '{0}' (all zeros)")]
    Ambiguous(String),
    #[error("augmentation error: {0}")]
    Augmentation(String),
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: Box<Error> },
    #[error("stage {stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn at_fold(self, fold: usize) -> Error {
        Error::Fold { fold, source: Box::new(self) }
    }

    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
