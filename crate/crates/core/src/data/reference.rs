use serde::{Deserialize, Serialize};

use super::encode::EncodedDataset;
use super::schema::FeatureKind;
use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Mean,
    Mode,
}

/// The population reference point in encoded space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub values: Vec<f64>,
    /// One entry per original feature.
    pub provenance: Vec<Provenance>,
    /// Set once a model has been attached.
    #[serde(default)]
    pub predicted_negative: Option<bool>,
}

impl Reference {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, provenance: Vec::new(), predicted_negative: None }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Index of the largest count, first one among ties.
fn first_argmax(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

/// Numeric features take the column mean, binary and categorical features
/// the modal level. Mode ties go to the first-declared level.
pub fn build_reference(train: &EncodedDataset) -> Result<Reference, DataError> {
    if train.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let space = &train.space;
    let n = train.len() as f64;
    let mut values = vec![0.0; train.n_cols()];
    let mut provenance = Vec::with_capacity(space.n_features());
    for (f, span) in space.schema.features.iter().zip(&space.groups) {
        match &f.kind {
            FeatureKind::Numeric => {
                let c = span.start;
                values[c] = train.rows().map(|r| r[c]).sum::<f64>() / n;
                provenance.push(Provenance::Mean);
            }
            FeatureKind::Binary { .. } => {
                let c = span.start;
                let ones = train.rows().filter(|r| r[c] == 1.0).count();
                let counts = [train.len() - ones, ones];
                values[c] = first_argmax(&counts) as f64;
                provenance.push(Provenance::Mode);
            }
            FeatureKind::Categorical { .. } => {
                let mut counts = vec![0usize; span.len()];
                for r in train.rows() {
                    for (k, &v) in r[span.range()].iter().enumerate() {
                        if v == 1.0 {
                            counts[k] += 1;
                        }
                    }
                }
                values[span.start + first_argmax(&counts)] = 1.0;
                provenance.push(Provenance::Mode);
            }
        }
    }
    Ok(Reference { values, provenance, predicted_negative: None })
}
