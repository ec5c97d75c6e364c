use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "asymmetric covariance: covar[{row}][{col}] = {upper} but covar[{col}][{row}] = {lower}"
    )]
    AsymmetricCovariance {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("negative variance on the covariance diagonal for '{0}'")]
    NegativeDiagonal(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("missing value range for variable '{0}'")]
    MissingRange(String),

    #[error("invalid range for '{name}': min {min} must be below max {max}")]
    InvalidRange { name: String, min: f64, max: f64 },

    #[error("interaction term not found for ({0})")]
    InteractionNotFound(String),

    #[error("ambiguous interaction term for ({request}): candidates {candidates:?}")]
    AmbiguousInteraction {
        request: String,
        candidates: Vec<String>,
    },

    #[error("parameter '{0}' not found")]
    UnknownParameter(String),

    #[error("duplicate parameter name '{0}'")]
    DuplicateParameter(String),

    #[error("invalid covariance sub-matrix at {at}: conditional variance {variance} < 0")]
    NegativeVariance { at: String, variance: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid draws: {0}")]
    InvalidDraws(String),

    #[error("invalid alpha {0}: must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("invalid thresholds ({0}, {1}): need 0 < t1 < t2 < 1")]
    InvalidThresholds(f64, f64),

    #[error("expected 2 or 3 theta names, got {0}")]
    ThetaCount(usize),

    #[error("no groups")]
    NoGroups,

    #[error("group {index} has no group_label")]
    MissingGroupLabel { index: usize },

    #[error("group '{label}': {source}")]
    Group {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("empty plot data")]
    EmptyPlotData,

    #[error("wrong table arity: expected {expected} moderator(s), got {found}")]
    Arity { expected: usize, found: usize },

    #[error("{0}")]
    Channel(String),

    #[error("invalid plot dimensions {width}x{height}")]
    Dimensions { width: i64, height: i64 },

    #[error("invalid color '{0}'")]
    Color(String),
}

impl Error {
    /// I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches the label of the group whose run failed.
    pub fn in_group(self, label: &str) -> Self {
        Error::Group {
            label: label.to_string(),
            source: Box::new(self),
        }
    }
}
