//! Scored binary classifiers: logistic-linear, two-hidden-layer MLP and
//! weighted gradient-boosted trees. Every family is `sigmoid(logit(x))`; the
//! trainable parameters of each family are exposed as one flat vector so the
//! losses in [`crate::optim`] can be written once.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Span;

pub mod baseline;
pub mod gbdt;
pub mod io;
pub mod linear;
pub mod mlp;

pub use baseline::{fit_baseline, BaselineConfig, LinearFitConfig, MlpFitConfig};
pub use gbdt::{fit_gbdt, GbdtConfig, GbdtParams, Tree};
pub use io::{deserialize, serialize, MODEL_FORMAT_VERSION};
pub use linear::LinearParams;
pub use mlp::MlpParams;

const INIT_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training data contains a single class")]
    SingleClassData,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("model payload version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),
    #[error("{0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Mlp,
    Gbdt,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "mlp" => Ok(ModelKind::Mlp),
            "gbdt" => Ok(ModelKind::Gbdt),
            other => Err(format!("unknown model kind `{other}` (linear, mlp, gbdt)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Mlp => "mlp",
            ModelKind::Gbdt => "gbdt",
        })
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A family whose score is `sigmoid(logit(x))` with a flat trainable
/// parameter vector.
pub trait Differentiable {
    fn input_dim(&self) -> usize;
    fn logit(&self, x: &[f64]) -> f64;
    fn n_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, theta: &[f64]);
    /// Adds `scale * ∂logit/∂θ` into `grad` and returns the logit.
    fn logit_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Linear(LinearParams),
    Mlp(MlpParams),
    Gbdt(GbdtParams),
}

macro_rules! dispatch {
    ($self:expr, $p:ident => $e:expr) => {
        match $self {
            ModelParams::Linear($p) => $e,
            ModelParams::Mlp($p) => $e,
            ModelParams::Gbdt($p) => $e,
        }
    };
}

impl Differentiable for ModelParams {
    fn input_dim(&self) -> usize {
        dispatch!(self, p => p.input_dim())
    }
    fn logit(&self, x: &[f64]) -> f64 {
        dispatch!(self, p => p.logit(x))
    }
    fn n_params(&self) -> usize {
        dispatch!(self, p => p.n_params())
    }
    fn params(&self) -> Vec<f64> {
        dispatch!(self, p => p.params())
    }
    fn set_params(&mut self, theta: &[f64]) {
        dispatch!(self, p => p.set_params(theta))
    }
    fn logit_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        dispatch!(self, p => p.logit_grad(x, scale, grad))
    }
}

/// Binary classifier: `f(x) = 1` iff `score(x) > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub threshold: f64,
    pub params: ModelParams,
    /// Digest of the feature space the model was trained on, if known.
    pub space_digest: Option<String>,
}

impl Classifier {
    pub fn new(params: ModelParams, threshold: f64) -> Self {
        Self { threshold, params, space_digest: None }
    }

    pub fn linear(intercept: f64, coef: Vec<f64>) -> Self {
        Self::new(ModelParams::Linear(LinearParams { intercept, coef }), 0.5)
    }

    /// Randomly initialised linear or MLP model. Tree ensembles are grown
    /// from data instead; see [`fit_gbdt`].
    pub fn init(kind: ModelKind, input_dim: usize, hidden: usize, seed: u64) -> Result<Self, ModelError> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // batch shuffling uses stream 0 of the same seed
        rng.set_stream(INIT_STREAM);
        let params = match kind {
            ModelKind::Linear => ModelParams::Linear(LinearParams::init(input_dim, &mut rng)),
            ModelKind::Mlp => ModelParams::Mlp(MlpParams::init(input_dim, hidden, &mut rng)),
            ModelKind::Gbdt => return Err(ModelError::InvalidConfig("gbdt models are fitted, not initialised".into())),
        };
        Ok(Self::new(params, 0.5))
    }

    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Linear(_) => ModelKind::Linear,
            ModelParams::Mlp(_) => ModelKind::Mlp,
            ModelParams::Gbdt(_) => ModelKind::Gbdt,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.params.input_dim()
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        let expected = self.input_dim();
        if x.len() != expected {
            return Err(ModelError::DimensionMismatch { expected, found: x.len() });
        }
        Ok(())
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        Ok(self.score_unchecked(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool, ModelError> {
        self.check_dim(x)?;
        Ok(self.predict_unchecked(x))
    }

    /// Pre-sigmoid score.
    pub fn raw(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        Ok(self.params.logit(x))
    }

    #[inline]
    pub fn score_unchecked(&self, x: &[f64]) -> f64 {
        sigmoid(self.params.logit(x))
    }

    #[inline]
    pub fn predict_unchecked(&self, x: &[f64]) -> bool {
        self.score_unchecked(x) > self.threshold
    }

    /// Score and its gradient with respect to the trainable parameters.
    pub fn score_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ModelError> {
        self.check_dim(x)?;
        let mut grad = vec![0.0; self.params.n_params()];
        let z = self.params.logit_grad(x, 1.0, &mut grad);
        let g = sigmoid(z);
        let d = g * (1.0 - g);
        grad.iter_mut().for_each(|v| *v *= d);
        Ok((g, grad))
    }

    /// Number of original features the model depends on, used as the SEV of
    /// a query that cannot be explained.
    pub fn features_used(&self, groups: &[Span]) -> usize {
        match &self.params {
            ModelParams::Linear(p) => {
                groups.iter().filter(|s| p.coef[s.range()].iter().any(|&b| b != 0.0)).count()
            }
            ModelParams::Mlp(p) => groups.iter().filter(|s| s.range().any(|c| p.input_column_used(c))).count(),
            ModelParams::Gbdt(p) => {
                let used = p.split_features();
                groups.iter().filter(|s| s.range().any(|c| used.contains(&c))).count()
            }
        }
    }
}
