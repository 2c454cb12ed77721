//! Tabular ingestion: schema, CSV parsing, stratified splits, one-hot
//! encoding with standardization, and the population reference.

use std::path::Path;

use thiserror::Error;

pub mod encode;
pub mod persist;
pub mod prepare;
pub mod raw;
pub mod reference;
pub mod schema;
pub mod split;

pub use encode::{encode, ColumnStats, DecodedValue, EncodedDataset, FeatureSpace, Span, Standardization};
pub use prepare::{prepare, prepare_fixed, Prepared};
pub use raw::{load_csv, read_csv, RawDataset, RawValue};
pub use reference::{build_reference, Provenance, Reference};
pub use schema::{FeatureKind, FeatureSchema, FeatureSpec};
pub use split::{stratified_indices, stratified_split};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: `{cell}` is not a declared level of `{feature}`")]
    UnknownLevel { row: usize, feature: String, cell: String },
    #[error("row {row}: `{cell}` is not a number (feature `{feature}`)")]
    InvalidNumber { row: usize, feature: String, cell: String },
    #[error("row {row}: label `{cell}` makes the label column non-binary")]
    NonBinaryLabel { row: usize, cell: String },
    #[error("data contains a single class")]
    SingleClassData,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    InvalidArgument(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.display().to_string(), source }
    }
}
