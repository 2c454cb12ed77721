//! Model files: JSON with a format marker, a `format_version`, the family
//! `kind`, the decision threshold and the family payload.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::gbdt::GbdtParams;
use super::linear::LinearParams;
use super::mlp::MlpParams;
use super::{Classifier, Differentiable, ModelError, ModelKind, ModelParams};

pub const MODEL_FORMAT: &str = "sevkit-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    kind: ModelKind,
    threshold: f64,
    input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    space_digest: Option<String>,
    params: Value,
}

pub fn serialize(model: &Classifier) -> Vec<u8> {
    let params = match &model.params {
        ModelParams::Linear(p) => serde_json::to_value(p),
        ModelParams::Mlp(p) => serde_json::to_value(p),
        ModelParams::Gbdt(p) => serde_json::to_value(p),
    }
    .expect("parameters serialize");
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        format_version: MODEL_FORMAT_VERSION,
        kind: model.kind(),
        threshold: model.threshold,
        input_dim: model.input_dim(),
        space_digest: model.space_digest.clone(),
        params,
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("model serializes");
    out.push(b'\n');
    out
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::CorruptPayload(msg.into())
}

pub fn deserialize(bytes: &[u8]) -> Result<Classifier, ModelError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
    if value.get("format").and_then(Value::as_str) != Some(MODEL_FORMAT) {
        return Err(corrupt("missing or wrong format marker"));
    }
    let version = value.get("format_version").and_then(Value::as_u64).ok_or_else(|| corrupt("missing format_version"))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(ModelError::VersionMismatch { found: version as u32, expected: MODEL_FORMAT_VERSION });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    let params = match file.kind {
        ModelKind::Linear => ModelParams::Linear(serde_json::from_value::<LinearParams>(file.params).map_err(|e| corrupt(e.to_string()))?),
        ModelKind::Mlp => {
            let p: MlpParams = serde_json::from_value(file.params).map_err(|e| corrupt(e.to_string()))?;
            if !p.shapes_valid() {
                return Err(corrupt("mlp layer shapes are inconsistent"));
            }
            ModelParams::Mlp(p)
        }
        ModelKind::Gbdt => {
            let p: GbdtParams = serde_json::from_value(file.params).map_err(|e| corrupt(e.to_string()))?;
            if p.weights.len() != p.trees.len() || !p.trees.iter().all(|t| t.is_well_formed(p.input)) {
                return Err(corrupt("gbdt trees are malformed"));
            }
            ModelParams::Gbdt(p)
        }
    };
    if params.input_dim() != file.input_dim {
        return Err(corrupt("input_dim does not match the payload"));
    }
    if !(file.threshold > 0.0 && file.threshold < 1.0) {
        return Err(corrupt("threshold must lie in (0, 1)"));
    }
    if params.params().iter().any(|v| !v.is_finite()) {
        return Err(corrupt("non-finite parameter"));
    }
    Ok(Classifier { threshold: file.threshold, params, space_digest: file.space_digest })
}
