use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),
    #[error("duplicate column name {0:?} in header")]
    DuplicateColumn(String),
    #[error("non-numeric value {value:?} in column {column:?} at data row {row}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("non-finite value {value:?} in column {column:?} at data row {row}")]
    NonFiniteCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("class {label} has {count} rows, too few to appear in both partitions")]
    ClassTooSmall { label: u8, count: usize },
    #[error("dataset contains a single class; both labels are required")]
    SingleClass,
    #[error("pruning removed every feature")]
    AllFeaturesRemoved,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input has {found} features, model was fitted on {expected}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("label sequence is empty")]
    EmptyInput,
    #[error("label value {0} is not binary")]
    NonBinaryLabel(u8),
    #[error("confusion matrix is all zeros")]
    ZeroMatrix,
    #[error("zero denominator computing {0}")]
    ZeroDenominator(&'static str),
    #[error("training loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("{found} features exceeds the limit of {max}")]
    TooManyFeatures { max: usize, found: usize },
    #[error("need at least {min} coalition samples, got {found}")]
    TooFewSamples { min: usize, found: usize },
    #[error("method {method} is not applicable to a {model} model")]
    Inapplicable { model: String, method: String },
    #[error("every feature scored zero; no top features to select")]
    NoInformativeFeatures,
    #[error("metric {0} is undefined on the baseline predictions")]
    MetricUndefined(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("run {index} ({label}) failed: {source}")]
    RunFailed {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for problems with the input data itself, as opposed to bad
    /// parameters or numerical failures during a run.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingLabelColumn(_)
            | Error::DuplicateColumn(_)
            | Error::NonNumericCell { .. }
            | Error::NonFiniteCell { .. }
            | Error::InvalidDataset(_)
            | Error::EmptyDataset
            | Error::TooFewRows { .. }
            | Error::ClassTooSmall { .. }
            | Error::SingleClass
            | Error::AllFeaturesRemoved
            | Error::UnknownFeature(_) => true,
            Error::RunFailed { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
