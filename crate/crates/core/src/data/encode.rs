use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::raw::{RawDataset, RawValue};
use super::schema::{FeatureKind, FeatureSchema};
use super::DataError;

/// Standard deviations below this are treated as zero variance.
pub const ZERO_VARIANCE_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    /// Divisor applied after centering; 1.0 for zero-variance columns.
    pub std: f64,
    pub scaled: bool,
}

impl ColumnStats {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Per original feature; `None` for binary and categorical features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub columns: Vec<Option<ColumnStats>>,
}

/// Half-open span of encoded columns owned by one original feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Schema plus everything needed to move between original and encoded space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub schema: FeatureSchema,
    pub groups: Vec<Span>,
    pub standardization: Standardization,
}

/// A value in original feature space, as shown to users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DecodedValue {
    Num(f64),
    Level(String),
}

impl std::fmt::Display for DecodedValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecodedValue::Num(v) => write!(f, "{v}"),
            DecodedValue::Level(l) => f.write_str(l),
        }
    }
}

pub fn group_spans(schema: &FeatureSchema) -> Vec<Span> {
    let mut start = 0;
    schema
        .features
        .iter()
        .map(|f| {
            let span = Span { start, end: start + f.kind.width() };
            start = span.end;
            span
        })
        .collect()
}

impl FeatureSpace {
    /// A space of `p` numeric features with identity standardization. Handy
    /// for synthetic data and tests.
    pub fn numeric(names: &[&str]) -> Self {
        let schema = FeatureSchema::new(
            "label",
            "1",
            names.iter().map(|n| super::schema::FeatureSpec::numeric(*n)).collect(),
        )
        .expect("numeric schema");
        Self::with_identity_stats(schema)
    }

    /// Identity standardization for every numeric feature.
    pub fn with_identity_stats(schema: FeatureSchema) -> Self {
        let columns = schema
            .features
            .iter()
            .map(|f| matches!(f.kind, FeatureKind::Numeric).then_some(ColumnStats { mean: 0.0, std: 1.0, scaled: false }))
            .collect();
        let groups = group_spans(&schema);
        Self { schema, groups, standardization: Standardization { columns } }
    }

    pub fn n_features(&self) -> usize {
        self.groups.len()
    }

    pub fn encoded_width(&self) -> usize {
        self.groups.last().map_or(0, |s| s.end)
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.schema.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn encode_row(&self, row: &[RawValue], out: &mut [f64]) {
        for (j, ((f, span), value)) in self.schema.features.iter().zip(&self.groups).zip(row).enumerate() {
            let cols = &mut out[span.range()];
            match (&f.kind, value) {
                (FeatureKind::Numeric, RawValue::Num(v)) => {
                    let stats = self.standardization.columns[j].expect("numeric stats");
                    cols[0] = stats.apply(*v);
                }
                (FeatureKind::Binary { .. }, RawValue::Level(l)) => cols[0] = if *l == 1 { 1.0 } else { 0.0 },
                (FeatureKind::Categorical { .. }, RawValue::Level(l)) => {
                    cols.fill(0.0);
                    cols[*l] = 1.0;
                }
                _ => unreachable!("raw value kind does not match schema"),
            }
        }
    }

    /// Value of original feature `j` given its encoded columns.
    pub fn decode_group(&self, j: usize, cols: &[f64]) -> RawValue {
        match &self.schema.features[j].kind {
            FeatureKind::Numeric => {
                let stats = self.standardization.columns[j].expect("numeric stats");
                RawValue::Num(stats.invert(cols[0]))
            }
            FeatureKind::Binary { .. } => RawValue::Level(usize::from(cols[0] >= 0.5)),
            FeatureKind::Categorical { .. } => {
                let mut best = 0;
                for (k, &v) in cols.iter().enumerate() {
                    if v > cols[best] {
                        best = k;
                    }
                }
                RawValue::Level(best)
            }
        }
    }

    pub fn decode_row(&self, x: &[f64]) -> Vec<RawValue> {
        self.groups.iter().enumerate().map(|(j, s)| self.decode_group(j, &x[s.range()])).collect()
    }

    /// User-facing value of feature `j` in encoded vector `x`.
    pub fn display_value(&self, j: usize, x: &[f64]) -> DecodedValue {
        let span = self.groups[j];
        match self.decode_group(j, &x[span.range()]) {
            RawValue::Num(v) => DecodedValue::Num(v),
            RawValue::Level(l) => {
                let levels = self.schema.features[j].kind.levels().expect("levelled feature");
                DecodedValue::Level(levels[l].clone())
            }
        }
    }

    /// Checks that every binary/categorical group of `x` is a valid encoding.
    pub fn is_valid_point(&self, x: &[f64]) -> bool {
        x.len() == self.encoded_width()
            && self.schema.features.iter().zip(&self.groups).all(|(f, s)| {
                let cols = &x[s.range()];
                match f.kind {
                    FeatureKind::Numeric => cols[0].is_finite(),
                    FeatureKind::Binary { .. } => cols[0] == 0.0 || cols[0] == 1.0,
                    FeatureKind::Categorical { .. } => {
                        cols.iter().all(|&v| v == 0.0 || v == 1.0) && cols.iter().filter(|&&v| v == 1.0).count() == 1
                    }
                }
            })
    }
}

/// Standardized, one-hot encoded design matrix (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub space: FeatureSpace,
    pub x: Vec<f64>,
    pub y: Vec<u8>,
    pub warnings: Vec<String>,
    /// Rows predicted positive by the attached model, once one is attached.
    pub n_positive_predicted: Option<usize>,
}

impl EncodedDataset {
    pub fn from_rows(space: FeatureSpace, rows: Vec<Vec<f64>>, y: Vec<u8>) -> Self {
        let x = rows.into_iter().flatten().collect();
        Self { space, x, y, warnings: Vec::new(), n_positive_predicted: None }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_cols(&self) -> usize {
        self.space.encoded_width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.n_cols().max(1))
    }

    pub fn subset(&self, idx: &[usize]) -> EncodedDataset {
        let mut x = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        EncodedDataset {
            space: self.space.clone(),
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            warnings: self.warnings.clone(),
            n_positive_predicted: None,
        }
    }

    pub fn decode(&self) -> RawDataset {
        RawDataset { rows: self.rows().map(|r| self.space.decode_row(r)).collect(), labels: self.y.clone() }
    }
}

fn fit_standardization(raw: &RawDataset, schema: &FeatureSchema) -> Result<(Standardization, Vec<String>), DataError> {
    if raw.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let n = raw.len() as f64;
    let mut warnings = Vec::new();
    let columns = schema
        .features
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if !matches!(f.kind, FeatureKind::Numeric) {
                return None;
            }
            let vals = raw.rows.iter().map(|r| r[j].as_num().expect("numeric cell"));
            let mean = vals.clone().sum::<f64>() / n;
            let ss: f64 = vals.map(|v| (v - mean) * (v - mean)).sum();
            let std = if raw.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
            if std < ZERO_VARIANCE_STD {
                warnings.push(format!("feature `{}` has zero variance; centered without scaling", f.name));
                Some(ColumnStats { mean, std: 1.0, scaled: false })
            } else {
                Some(ColumnStats { mean, std, scaled: true })
            }
        })
        .collect();
    Ok((Standardization { columns }, warnings))
}

/// Encodes `raw`. Without `fitted` the standardization is fitted on `raw`
/// itself (training split); otherwise `fitted` is applied unchanged.
pub fn encode(raw: &RawDataset, schema: &FeatureSchema, fitted: Option<&Standardization>) -> Result<EncodedDataset, DataError> {
    if !raw.is_empty() && raw.n_features() != schema.len() {
        return Err(DataError::InvalidArgument(format!(
            "rows have {} features, schema declares {}",
            raw.n_features(),
            schema.len()
        )));
    }
    let (standardization, warnings) = match fitted {
        Some(s) => {
            if s.columns.len() != schema.len() {
                return Err(DataError::InvalidArgument("standardization does not match schema".into()));
            }
            (s.clone(), Vec::new())
        }
        None => fit_standardization(raw, schema)?,
    };
    let space = FeatureSpace { schema: schema.clone(), groups: group_spans(schema), standardization };
    let p = space.encoded_width();
    let mut x = vec![0.0; raw.len() * p];
    for (row, out) in raw.rows.iter().zip(x.chunks_exact_mut(p.max(1))) {
        space.encode_row(row, out);
    }
    Ok(EncodedDataset { space, x, y: raw.labels.clone(), warnings, n_positive_predicted: None })
}
