use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("label `{0}` has no mapping to a coarse class")]
    UnmappedLabel(String),

    #[error("every column was removed by preprocessing")]
    AllColumnsRemoved,

    #[error("need at least {needed} rows, got {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("class priors must sum to 1 (got {0})")]
    InvalidPriors(f64),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: String, expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("loss became NaN at epoch {epoch}, batch {batch}")]
    NanLoss { epoch: usize, batch: usize },

    #[error("class {0} has no training samples")]
    EmptyClass(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),

    #[error("sparsity {0} outside [0, 1)")]
    InvalidSparsity(f64),

    #[error("invalid prune schedule: {0}")]
    InvalidSchedule(String),

    #[error("CSR invariant violated: {0}")]
    CsrInvariant(String),

    #[error("not a SPIF container (bad magic)")]
    BadMagic,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("unknown model file format: {0}")]
    UnknownFormat(PathBuf),

    #[error("KernelSHAP regression is singular; increase coalition_samples (currently {0})")]
    SingularSystem(usize),

    #[error("invalid SHAP config: {0}")]
    InvalidShapConfig(String),

    #[error("k = {k} exceeds feature count {features}")]
    TooManyFeatures { k: usize, features: usize },

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("report incomplete, missing: {}", .0.join(", "))]
    IncompleteReport(Vec<String>),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable snake_case tag used in the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingFile(_) => "missing_file",
            Error::RaggedRow { .. } => "ragged_row",
            Error::MissingColumn(_) => "missing_column",
            Error::DuplicateColumn(_) => "duplicate_column",
            Error::UnmappedLabel(_) => "unmapped_label",
            Error::AllColumnsRemoved => "all_columns_removed",
            Error::TooFewRows { .. } => "too_few_rows",
            Error::InvalidPriors(_) => "invalid_priors",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NanLoss { .. } => "nan_loss",
            Error::EmptyClass(_) => "empty_class",
            Error::InvalidModel(_) => "invalid_model",
            Error::InvalidTrainConfig(_) => "invalid_train_config",
            Error::InvalidSparsity(_) => "invalid_sparsity",
            Error::InvalidSchedule(_) => "invalid_schedule",
            Error::CsrInvariant(_) => "csr_invariant",
            Error::BadMagic => "bad_magic",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::Truncated(_) => "truncated",
            Error::UnknownFormat(_) => "unknown_format",
            Error::SingularSystem(_) => "singular_system",
            Error::InvalidShapConfig(_) => "invalid_shap_config",
            Error::TooManyFeatures { .. } => "too_many_features",
            Error::InvalidSpace(_) => "invalid_space",
            Error::IncompleteReport(_) => "incomplete_report",
            Error::Config(_) => "config",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::Empty(_) => "empty",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { context: context.into(), expected, found }
    }
}
