use std::io::Read;
use std::path::Path;

use super::schema::{FeatureKind, FeatureSchema};
use super::DataError;

/// A parsed cell: a real for numeric features, a level index otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawValue {
    Num(f64),
    Level(usize),
}

impl RawValue {
    pub fn as_num(self) -> Option<f64> {
        match self {
            RawValue::Num(v) => Some(v),
            RawValue::Level(_) => None,
        }
    }

    pub fn as_level(self) -> Option<usize> {
        match self {
            RawValue::Level(l) => Some(l),
            RawValue::Num(_) => None,
        }
    }
}

/// Rows in original feature space, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub rows: Vec<Vec<RawValue>>,
    pub labels: Vec<u8>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn subset(&self, idx: &[usize]) -> RawDataset {
        RawDataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<RawDataset, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_csv(file, schema)
}

/// Parses CSV text against `schema`. Columns are matched by header name;
/// columns the schema does not mention are ignored.
pub fn read_csv<R: Read>(reader: R, schema: &FeatureSchema) -> Result<RawDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let label_col = find(&schema.label)?;
    let cols = schema.features.iter().map(|f| find(&f.name)).collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut negative_label: Option<String> = None;
    for (i, rec) in rdr.records().enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(|e| DataError::Csv(format!("row {row_no}: {e}")))?;
        let mut row = Vec::with_capacity(cols.len());
        for (f, &c) in schema.features.iter().zip(&cols) {
            let cell = rec.get(c).unwrap_or("");
            let value = match &f.kind {
                FeatureKind::Numeric => RawValue::Num(cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(
                    || DataError::InvalidNumber { row: row_no, feature: f.name.clone(), cell: cell.to_string() },
                )?),
                kind => RawValue::Level(kind.level_index(cell).ok_or_else(|| DataError::UnknownLevel {
                    row: row_no,
                    feature: f.name.clone(),
                    cell: cell.to_string(),
                })?),
            };
            row.push(value);
        }
        let cell = rec.get(label_col).unwrap_or("");
        let y = if cell == schema.positive_label {
            1
        } else {
            match &negative_label {
                Some(neg) if neg == cell => 0,
                Some(_) => return Err(DataError::NonBinaryLabel { row: row_no, cell: cell.to_string() }),
                None => {
                    negative_label = Some(cell.to_string());
                    0
                }
            }
        };
        rows.push(row);
        labels.push(y);
    }
    Ok(RawDataset { rows, labels })
}
