//! On-disk forms of encoded splits, the feature-space sidecar and the
//! reference point. Every file carries a `format_version`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encode::{DecodedValue, EncodedDataset, FeatureSpace};
use super::reference::Reference;
use super::DataError;
use crate::fsutil::write_atomic;

pub const DATA_FORMAT_VERSION: u32 = 1;
pub const LABEL_COLUMN: &str = "__label";

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    format_version: u32,
    columns: Vec<String>,
    #[serde(flatten)]
    space: FeatureSpace,
}

#[derive(Serialize, Deserialize)]
struct ReferenceFile {
    format_version: u32,
    #[serde(flatten)]
    reference: Reference,
    /// Original-space view, for humans; ignored on read.
    #[serde(default)]
    decoded: Vec<(String, DecodedValue)>,
}

fn check_version(found: u32, what: &str) -> Result<(), DataError> {
    if found != DATA_FORMAT_VERSION {
        return Err(DataError::Format(format!(
            "{what}: format_version {found} is not supported (expected {DATA_FORMAT_VERSION})"
        )));
    }
    Ok(())
}

pub fn space_to_json(space: &FeatureSpace) -> String {
    let file = SpaceFile { format_version: DATA_FORMAT_VERSION, columns: space.schema.encoded_names(), space: space.clone() };
    serde_json::to_string_pretty(&file).expect("space serializes") + "\n"
}

pub fn space_from_json(text: &str) -> Result<FeatureSpace, DataError> {
    let file: SpaceFile = serde_json::from_str(text).map_err(|e| DataError::Format(format!("feature space: {e}")))?;
    check_version(file.format_version, "feature space")?;
    file.space.schema.validate()?;
    if file.space.groups != super::encode::group_spans(&file.space.schema) {
        return Err(DataError::Format("feature space: group spans do not match schema".into()));
    }
    Ok(file.space)
}

pub fn write_space(path: &Path, space: &FeatureSpace) -> Result<(), DataError> {
    write_atomic(path, space_to_json(space).as_bytes()).map_err(|e| DataError::io(path, e))
}

pub fn read_space(path: &Path) -> Result<FeatureSpace, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    space_from_json(&text)
}

pub fn reference_to_json(reference: &Reference, space: &FeatureSpace) -> String {
    let decoded = (0..space.n_features())
        .map(|j| (space.schema.features[j].name.clone(), space.display_value(j, &reference.values)))
        .collect();
    let file = ReferenceFile { format_version: DATA_FORMAT_VERSION, reference: reference.clone(), decoded };
    serde_json::to_string_pretty(&file).expect("reference serializes") + "\n"
}

pub fn reference_from_json(text: &str) -> Result<Reference, DataError> {
    let file: ReferenceFile = serde_json::from_str(text).map_err(|e| DataError::Format(format!("reference: {e}")))?;
    check_version(file.format_version, "reference")?;
    Ok(file.reference)
}

pub fn write_reference(path: &Path, reference: &Reference, space: &FeatureSpace) -> Result<(), DataError> {
    write_atomic(path, reference_to_json(reference, space).as_bytes()).map_err(|e| DataError::io(path, e))
}

pub fn read_reference(path: &Path) -> Result<Reference, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    reference_from_json(&text)
}

pub fn encoded_to_csv(data: &EncodedDataset) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = data.space.schema.encoded_names();
    header.push(LABEL_COLUMN.to_string());
    wtr.write_record(&header).expect("in-memory write");
    for (row, y) in data.rows().take(data.len()).zip(&data.y) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        wtr.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("flush")).expect("utf8")
}

pub fn encoded_from_csv(text: &str, space: &FeatureSpace) -> Result<EncodedDataset, DataError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.iter().map(String::from).collect();
    let mut expected = space.schema.encoded_names();
    expected.push(LABEL_COLUMN.to_string());
    if header != expected {
        return Err(DataError::Format("encoded CSV header does not match the feature space".into()));
    }
    let p = space.encoded_width();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DataError::Csv(format!("row {}: {e}", i + 1)))?;
        for (k, cell) in rec.iter().take(p).enumerate() {
            x.push(cell.parse::<f64>().map_err(|_| DataError::InvalidNumber {
                row: i + 1,
                feature: expected[k].clone(),
                cell: cell.to_string(),
            })?);
        }
        y.push(match rec.get(p) {
            Some("0") => 0,
            Some("1") => 1,
            other => return Err(DataError::NonBinaryLabel { row: i + 1, cell: other.unwrap_or("").to_string() }),
        });
    }
    Ok(EncodedDataset { space: space.clone(), x, y, warnings: Vec::new(), n_positive_predicted: None })
}

pub fn write_encoded(path: &Path, data: &EncodedDataset) -> Result<(), DataError> {
    write_atomic(path, encoded_to_csv(data).as_bytes()).map_err(|e| DataError::io(path, e))
}

pub fn read_encoded(path: &Path, space: &FeatureSpace) -> Result<EncodedDataset, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    encoded_from_csv(&text, space)
}
