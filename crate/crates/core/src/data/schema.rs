use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

pub const SCHEMA_FORMAT_VERSION: u32 = 1;

/// Kind of an original (pre-encoding) feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    /// Two levels; the column is 1 when the cell equals `levels[1]`.
    Binary {
        #[serde(default = "default_binary_levels")]
        levels: [String; 2],
    },
    Categorical { levels: Vec<String> },
}

fn default_binary_levels() -> [String; 2] {
    ["0".to_string(), "1".to_string()]
}

impl FeatureKind {
    /// Number of encoded columns this feature occupies.
    pub fn width(&self) -> usize {
        match self {
            FeatureKind::Numeric | FeatureKind::Binary { .. } => 1,
            FeatureKind::Categorical { levels } => levels.len(),
        }
    }

    pub fn levels(&self) -> Option<&[String]> {
        match self {
            FeatureKind::Numeric => None,
            FeatureKind::Binary { levels } => Some(&levels[..]),
            FeatureKind::Categorical { levels } => Some(levels),
        }
    }

    pub fn level_index(&self, cell: &str) -> Option<usize> {
        self.levels()?.iter().position(|l| l == cell)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
    #[serde(default)]
    pub restricted: bool,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: FeatureKind::Numeric, restricted: false }
    }

    pub fn binary(name: impl Into<String>, off: &str, on: &str) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Binary { levels: [off.to_string(), on.to_string()] },
            restricted: false,
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical { levels: levels.into_iter().map(Into::into).collect() },
            restricted: false,
        }
    }

    pub fn restricted(mut self) -> Self {
        self.restricted = true;
        self
    }
}

/// Ordered feature declarations plus the label column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(default = "default_schema_version")]
    pub format_version: u32,
    pub label: String,
    pub positive_label: String,
    pub features: Vec<FeatureSpec>,
}

fn default_schema_version() -> u32 {
    SCHEMA_FORMAT_VERSION
}

impl FeatureSchema {
    pub fn new(label: impl Into<String>, positive_label: impl Into<String>, features: Vec<FeatureSpec>) -> Result<Self, DataError> {
        let schema = Self {
            format_version: SCHEMA_FORMAT_VERSION,
            label: label.into(),
            positive_label: positive_label.into(),
            features,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let schema: Self = serde_json::from_str(text).map_err(|e| DataError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.format_version != SCHEMA_FORMAT_VERSION {
            return Err(DataError::Schema(format!(
                "unsupported schema format_version {} (expected {SCHEMA_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.features.is_empty() {
            return Err(DataError::Schema("schema declares no features".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if f.name == self.label {
                return Err(DataError::Schema(format!("feature `{}` collides with the label column", f.name)));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(DataError::Schema(format!("duplicate feature name `{}`", f.name)));
            }
            if let Some(levels) = f.kind.levels() {
                if levels.is_empty() {
                    return Err(DataError::Schema(format!("feature `{}` has no levels", f.name)));
                }
                let mut lv = HashSet::new();
                for l in levels {
                    if !lv.insert(l.as_str()) {
                        return Err(DataError::Schema(format!("feature `{}` repeats level `{l}`", f.name)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Indices of features flagged `restricted`.
    pub fn restricted_set(&self) -> Vec<usize> {
        self.features.iter().enumerate().filter(|(_, f)| f.restricted).map(|(i, _)| i).collect()
    }

    /// Total encoded width.
    pub fn encoded_width(&self) -> usize {
        self.features.iter().map(|f| f.kind.width()).sum()
    }

    /// Names of the encoded columns, `name` for single-column groups and
    /// `name=level` for one-hot columns.
    pub fn encoded_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.encoded_width());
        for f in &self.features {
            match &f.kind {
                FeatureKind::Numeric | FeatureKind::Binary { .. } => out.push(f.name.clone()),
                FeatureKind::Categorical { levels } => {
                    out.extend(levels.iter().map(|l| format!("{}={l}", f.name)));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_json_schema() {
        let text = r#"{
            "label": "risk", "positive_label": "high",
            "features": [
                {"name": "housing", "kind": "categorical", "levels": ["Rent", "Mortgage", "Own"]},
                {"name": "age", "kind": "numeric", "restricted": true},
                {"name": "phone", "kind": "binary", "levels": ["no", "yes"]},
                {"name": "flag", "kind": "binary"}
            ]
        }"#;
        let s = FeatureSchema::from_json(text).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.encoded_width(), 6);
        assert_eq!(s.restricted_set(), vec![1]);
        assert_eq!(s.encoded_names()[0], "housing=Rent");
        assert_eq!(s.features[3].kind.levels().unwrap(), &["0".to_string(), "1".to_string()]);
    }

    #[test]
    fn rejects_duplicates_and_empty_levels() {
        let dup = FeatureSchema::new("y", "1", vec![FeatureSpec::numeric("a"), FeatureSpec::numeric("a")]);
        assert!(matches!(dup, Err(DataError::Schema(_))));
        let empty = FeatureSchema::new("y", "1", vec![FeatureSpec::categorical("c", Vec::<String>::new())]);
        assert!(matches!(empty, Err(DataError::Schema(_))));
        let rep = FeatureSchema::new("y", "1", vec![FeatureSpec::categorical("c", ["a", "a"])]);
        assert!(matches!(rep, Err(DataError::Schema(_))));
    }
}
