//! Standard (SEV-agnostic) trainers for the three families.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbdt::{fit_gbdt, GbdtConfig};
use super::linear::LinearParams;
use super::mlp::{MlpParams, DEFAULT_HIDDEN};
use super::{sigmoid, Classifier, Differentiable, ModelError, ModelParams};
use crate::data::EncodedDataset;
use crate::optim::losses::{bce_grad, loss_bce, Batch};
use crate::optim::optimizer::Adam;

/// Penalized logistic regression fitted by accelerated proximal gradient
/// (FISTA) on the mean log-loss. The intercept is never penalized; the L1
/// part is applied by soft-thresholding, so coefficients can be exactly 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearFitConfig {
    pub l1: f64,
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for LinearFitConfig {
    fn default() -> Self {
        Self { l1: 0.0, l2: 0.0, max_iter: 5000, tol: 1e-9, seed: 0, threshold: 0.5 }
    }
}

impl LinearFitConfig {
    /// Penalty strength equivalent to an inverse regularization `c` applied
    /// to the summed log-loss over `n` rows.
    pub fn lambda_from_c(c: f64, n: usize) -> f64 {
        1.0 / (c * n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpFitConfig {
    pub hidden: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for MlpFitConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN,
            max_epochs: 200,
            learning_rate: 1e-3,
            batch_size: 128,
            patience: 5,
            validation_fraction: 0.1,
            seed: 0,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaselineConfig {
    Linear(LinearFitConfig),
    Mlp(MlpFitConfig),
    Gbdt { config: GbdtConfig, threshold: f64 },
}

fn check_classes(train: &EncodedDataset) -> Result<(), ModelError> {
    let pos = train.y.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == train.len() {
        return Err(ModelError::SingleClassData);
    }
    Ok(())
}

pub fn fit_baseline(train: &EncodedDataset, config: &BaselineConfig) -> Result<Classifier, ModelError> {
    check_classes(train)?;
    match config {
        BaselineConfig::Linear(c) => fit_linear(train, c),
        BaselineConfig::Mlp(c) => fit_mlp(train, c),
        BaselineConfig::Gbdt { config, threshold } => fit_gbdt(train, config, *threshold),
    }
}

/// Largest eigenvalue of `[1 X]ᵀ[1 X] / n` by power iteration.
fn gram_spectral_norm(train: &EncodedDataset) -> f64 {
    let p = train.n_cols() + 1;
    let n = train.len() as f64;
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut out = vec![0.0; p];
        for r in train.rows() {
            let s = v[0] + r.iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>();
            out[0] += s / n;
            for (o, a) in out[1..].iter_mut().zip(r) {
                *o += s * a / n;
            }
        }
        let norm = out.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = out.into_iter().map(|a| a / norm).collect();
    }
    lambda
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn linear_objective(params: &LinearParams, train: &EncodedDataset, l1: f64, l2: f64) -> f64 {
    let n = train.len() as f64;
    let loss: f64 = train
        .rows()
        .zip(&train.y)
        .map(|(r, &y)| {
            let z = params.logit(r);
            // log(1 + e^z) - y z, evaluated stably
            z.max(0.0) + (-z.abs()).exp().ln_1p() - f64::from(y) * z
        })
        .sum::<f64>()
        / n;
    loss + l1 * params.coef.iter().map(|b| b.abs()).sum::<f64>() + 0.5 * l2 * params.coef.iter().map(|b| b * b).sum::<f64>()
}

fn smooth_grad(theta: &[f64], train: &EncodedDataset, l2: f64) -> Vec<f64> {
    let n = train.len() as f64;
    let mut grad = vec![0.0; theta.len()];
    for (r, &y) in train.rows().zip(&train.y) {
        let z = theta[0] + r.iter().zip(&theta[1..]).map(|(a, b)| a * b).sum::<f64>();
        let d = (sigmoid(z) - f64::from(y)) / n;
        grad[0] += d;
        for (g, a) in grad[1..].iter_mut().zip(r) {
            *g += d * a;
        }
    }
    for (g, t) in grad[1..].iter_mut().zip(&theta[1..]) {
        *g += l2 * t;
    }
    grad
}

fn fit_linear(train: &EncodedDataset, c: &LinearFitConfig) -> Result<Classifier, ModelError> {
    if c.l1 < 0.0 || c.l2 < 0.0 {
        return Err(ModelError::InvalidConfig("penalties must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let init = LinearParams::init(train.n_cols(), &mut rng);
    let lipschitz = 0.25 * gram_spectral_norm(train) * 1.05 + c.l2;
    let step = 1.0 / lipschitz.max(1e-12);
    let mut x = init.params();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut params = init.clone();
    for iter in 0..c.max_iter {
        let grad = smooth_grad(&y, train, c.l2);
        let mut next: Vec<f64> = y.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
        for v in &mut next[1..] {
            *v = soft_threshold(*v, step * c.l1);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteLoss { epoch: iter });
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let delta = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = next.iter().zip(&x).map(|(a, b)| a + momentum * (a - b)).collect();
        x = next;
        t = t_next;
        if delta < c.tol {
            break;
        }
    }
    params.set_params(&x);
    if !linear_objective(&params, train, c.l1, c.l2).is_finite() {
        return Err(ModelError::NonFiniteLoss { epoch: c.max_iter });
    }
    Ok(Classifier::new(ModelParams::Linear(params), c.threshold))
}

fn fit_mlp(train: &EncodedDataset, c: &MlpFitConfig) -> Result<Classifier, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let params = MlpParams::init(train.n_cols(), c.hidden, &mut rng);
    let mut model = Classifier::new(ModelParams::Mlp(params), c.threshold);
    let mut idx: Vec<usize> = (0..train.len()).collect();
    idx.shuffle(&mut rng);
    let n_val = if c.patience > 0 { ((train.len() as f64) * c.validation_fraction).round() as usize } else { 0 };
    let (val_idx, fit_idx) = idx.split_at(n_val.min(train.len().saturating_sub(1)));
    let mut fit_idx = fit_idx.to_vec();
    let val = Batch { rows: val_idx.iter().map(|&i| train.row(i)).collect(), labels: val_idx.iter().map(|&i| train.y[i]).collect() };

    let mut theta = model.params.params();
    let mut adam = Adam::new(c.learning_rate, theta.len());
    let mut best = (f64::INFINITY, theta.clone());
    let mut stale = 0;
    for epoch in 0..c.max_epochs {
        fit_idx.shuffle(&mut rng);
        for chunk in fit_idx.chunks(c.batch_size.max(1)) {
            let batch = Batch { rows: chunk.iter().map(|&i| train.row(i)).collect(), labels: chunk.iter().map(|&i| train.y[i]).collect() };
            let (loss, grad) = bce_grad(&model, &batch);
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch });
            }
            adam.step(&mut theta, &grad);
            model.params.set_params(&theta);
        }
        if val.is_empty() {
            continue;
        }
        let v = loss_bce(&model, &val);
        if v < best.0 - 1e-4 {
            best = (v, theta.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= c.patience {
                break;
            }
        }
    }
    if !val.is_empty() && best.0.is_finite() {
        model.params.set_params(&best.1);
    }
    Ok(model)
}
