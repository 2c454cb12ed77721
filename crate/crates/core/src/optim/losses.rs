//! Loss terms and their parameter gradients. Every function returning a
//! gradient returns it with respect to the model's flat trainable parameter
//! vector ([`Differentiable::params`]).
//!
//! The one-flip losses use the same group-atomic hypercube as the SEV
//! search: moving feature `j` swaps its whole encoded span.

use rayon::prelude::*;

use super::OptimError;
use crate::data::Span;
use crate::model::{sigmoid, Classifier, Differentiable, LinearParams};

/// Scores are clamped to this band before taking logs.
pub const BCE_CLAMP: f64 = 1e-12;
/// Default floor for zero coefficients in the volume terms.
pub const DENOMINATOR_EPS: f64 = 1e-8;
const CHUNK: usize = 16;

/// Labelled rows in encoded space.
#[derive(Debug, Clone, Default)]
pub struct Batch<'a> {
    pub rows: Vec<&'a [f64]>,
    pub labels: Vec<u8>,
}

impl<'a> Batch<'a> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Which side of the hypercube a one-flip loss looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Reference with one feature taken from the query.
    Plus,
    /// Query with one feature taken from the reference.
    Minus,
}

fn zeros(model: &Classifier) -> Vec<f64> {
    vec![0.0; model.params.n_params()]
}

/// Adds `scale * ∂g(x)/∂θ` into `grad`, returns `g(x)`.
fn add_score_grad(model: &Classifier, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
    let z = model.params.logit(x);
    let g = sigmoid(z);
    let d = g * (1.0 - g);
    model.params.logit_grad(x, scale * d, grad);
    g
}

/// Sums per-chunk partial gradients in chunk order, so the reduction does
/// not depend on the thread count.
fn reduce_in_order(parts: Vec<Vec<f64>>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for part in parts {
        for (o, p) in out.iter_mut().zip(&part) {
            *o += p;
        }
    }
    out
}

fn clamped_bce(g: f64, y: u8) -> f64 {
    let c = g.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    if y == 1 {
        -c.ln()
    } else {
        -(1.0 - c).ln()
    }
}

/// Mean binary cross-entropy over the batch.
pub fn loss_bce(model: &Classifier, batch: &Batch) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let total: f64 = batch
        .rows
        .iter()
        .zip(&batch.labels)
        .map(|(x, &y)| clamped_bce(model.score_unchecked(x), y))
        .sum();
    total / batch.len() as f64
}

/// Mean BCE and its gradient. The clamp bounds the value only: every row
/// contributes `g - y` at the logit, so a confidently wrong row keeps pulling
/// instead of going silent.
pub fn bce_grad(model: &Classifier, batch: &Batch) -> (f64, Vec<f64>) {
    let n = batch.len();
    if n == 0 {
        return (0.0, zeros(model));
    }
    let np = model.params.n_params();
    let inv = 1.0 / n as f64;
    let parts: Vec<(f64, Vec<f64>)> = batch
        .rows
        .par_chunks(CHUNK)
        .zip(batch.labels.par_chunks(CHUNK))
        .map(|(rows, labels)| {
            let mut grad = vec![0.0; np];
            let mut value = 0.0;
            for (x, &y) in rows.iter().zip(labels) {
                let z = model.params.logit(x);
                let g = sigmoid(z);
                value += clamped_bce(g, y);
                // d/dz of BCE(sigmoid(z)) is g - y
                model.params.logit_grad(x, inv * (g - f64::from(y)), &mut grad);
            }
            (value, grad)
        })
        .collect();
    let value = parts.iter().map(|p| p.0).sum::<f64>() * inv;
    (value, reduce_in_order(parts.into_iter().map(|p| p.1).collect(), np))
}

/// Builds the one-flip vertex for feature group `span` into `buf`.
fn one_flip(side: Side, query: &[f64], reference: &[f64], span: Span, buf: &mut [f64]) {
    match side {
        Side::Plus => {
            buf.copy_from_slice(reference);
            buf[span.range()].copy_from_slice(&query[span.range()]);
        }
        Side::Minus => {
            buf.copy_from_slice(query);
            buf[span.range()].copy_from_slice(&reference[span.range()]);
        }
    }
}

/// Best one-flip vertex of a query: the maximum score for `Plus`, the
/// minimum for `Minus`, lowest feature index on ties.
fn best_flip(model: &Classifier, side: Side, query: &[f64], reference: &[f64], groups: &[Span], free: &[usize]) -> (f64, usize) {
    let mut buf = vec![0.0; query.len()];
    let mut best = (f64::NAN, usize::MAX);
    for &j in free {
        one_flip(side, query, reference, groups[j], &mut buf);
        let g = model.score_unchecked(&buf);
        let better = match side {
            Side::Plus => g > best.0,
            Side::Minus => g < best.0,
        };
        if best.1 == usize::MAX || better {
            best = (g, j);
        }
    }
    best
}

/// Per-query one-flip scores and the selected feature index.
pub fn one_flip_extremes(
    model: &Classifier,
    positives: &[&[f64]],
    reference: &[f64],
    groups: &[Span],
    plus: bool,
) -> Vec<(f64, usize)> {
    let free: Vec<usize> = (0..groups.len()).collect();
    let side = if plus { Side::Plus } else { Side::Minus };
    positives.iter().map(|q| best_flip(model, side, q, reference, groups, &free)).collect()
}

fn allopt(
    model: &Classifier,
    side: Side,
    positives: &[&[f64]],
    reference: &[f64],
    groups: &[Span],
    free: &[usize],
    threshold: f64,
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>), OptimError> {
    if positives.is_empty() {
        return Err(OptimError::EmptyPositives);
    }
    if free.is_empty() {
        return Err(OptimError::AllFeaturesRestricted);
    }
    let np = model.params.n_params();
    let inv = 1.0 / positives.len() as f64;
    let parts: Vec<(f64, Option<Vec<f64>>)> = positives
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut value = 0.0;
            let mut grad = want_grad.then(|| vec![0.0; np]);
            let mut buf = vec![0.0; reference.len()];
            for q in chunk {
                let (g, j) = best_flip(model, side, q, reference, groups, free);
                match side {
                    Side::Plus => {
                        value -= g.min(threshold);
                        if let (Some(grad), true) = (grad.as_mut(), g < threshold) {
                            one_flip(side, q, reference, groups[j], &mut buf);
                            add_score_grad(model, &buf, -inv, grad);
                        }
                    }
                    Side::Minus => {
                        value += g.max(threshold);
                        if let (Some(grad), true) = (grad.as_mut(), g > threshold) {
                            one_flip(side, q, reference, groups[j], &mut buf);
                            add_score_grad(model, &buf, inv, grad);
                        }
                    }
                }
            }
            (value, grad)
        })
        .collect();
    let value = parts.iter().map(|p| p.0).sum::<f64>() * inv;
    let grad = want_grad.then(|| reduce_in_order(parts.into_iter().map(|p| p.1.unwrap()).collect(), np));
    Ok((value, grad))
}

fn all_features(groups: &[Span]) -> Vec<usize> {
    (0..groups.len()).collect()
}

/// Features outside `restricted`, in index order.
pub fn free_features(n_features: usize, restricted: &[usize]) -> Vec<usize> {
    (0..n_features).filter(|j| !restricted.contains(j)).collect()
}

/// `-(1/n⁺) Σ_i min(max_j g(e_j ⊙ x_i + (1 - e_j) ⊙ x̃), T)`.
pub fn loss_allopt_plus(model: &Classifier, positives: &[&[f64]], reference: &[f64], groups: &[Span], threshold: f64) -> Result<f64, OptimError> {
    Ok(allopt(model, Side::Plus, positives, reference, groups, &all_features(groups), threshold, false)?.0)
}

pub fn allopt_plus_grad(model: &Classifier, positives: &[&[f64]], reference: &[f64], groups: &[Span], threshold: f64) -> Result<(f64, Vec<f64>), OptimError> {
    let (v, g) = allopt(model, Side::Plus, positives, reference, groups, &all_features(groups), threshold, true)?;
    Ok((v, g.unwrap()))
}

/// `(1/n⁺) Σ_i max(min_j g((1 - e_j) ⊙ x_i + e_j ⊙ x̃), T)`.
pub fn loss_allopt_minus(model: &Classifier, positives: &[&[f64]], reference: &[f64], groups: &[Span], threshold: f64) -> Result<f64, OptimError> {
    Ok(allopt(model, Side::Minus, positives, reference, groups, &all_features(groups), threshold, false)?.0)
}

pub fn allopt_minus_grad(model: &Classifier, positives: &[&[f64]], reference: &[f64], groups: &[Span], threshold: f64) -> Result<(f64, Vec<f64>), OptimError> {
    let (v, g) = allopt(model, Side::Minus, positives, reference, groups, &all_features(groups), threshold, true)?;
    Ok((v, g.unwrap()))
}

fn check_restricted(groups: &[Span], restricted: &[usize]) -> Result<Vec<usize>, OptimError> {
    if let Some(&bad) = restricted.iter().find(|&&j| j >= groups.len()) {
        return Err(OptimError::InvalidConfig(format!("restricted feature index {bad} out of range")));
    }
    let free = free_features(groups.len(), restricted);
    if free.is_empty() {
        return Err(OptimError::AllFeaturesRestricted);
    }
    Ok(free)
}

/// The minus loss with the minimization limited to non-restricted features.
pub fn loss_allopt_restricted(
    model: &Classifier,
    positives: &[&[f64]],
    reference: &[f64],
    groups: &[Span],
    restricted: &[usize],
    threshold: f64,
) -> Result<f64, OptimError> {
    let free = check_restricted(groups, restricted)?;
    Ok(allopt(model, Side::Minus, positives, reference, groups, &free, threshold, false)?.0)
}

pub fn allopt_restricted_grad(
    model: &Classifier,
    positives: &[&[f64]],
    reference: &[f64],
    groups: &[Span],
    restricted: &[usize],
    threshold: f64,
) -> Result<(f64, Vec<f64>), OptimError> {
    let free = check_restricted(groups, restricted)?;
    let (v, g) = allopt(model, Side::Minus, positives, reference, groups, &free, threshold, true)?;
    Ok((v, g.unwrap()))
}

/// `max(g(x̃), T - θ)`. At `g(x̃) = T - θ` the flat side's zero gradient is used.
pub fn loss_pos_base(model: &Classifier, reference: &[f64], threshold: f64, margin: f64) -> f64 {
    model.score_unchecked(reference).max(threshold - margin)
}

pub fn pos_base_grad(model: &Classifier, reference: &[f64], threshold: f64, margin: f64) -> (f64, Vec<f64>) {
    let mut grad = zeros(model);
    let g = model.score_unchecked(reference);
    if g > threshold - margin {
        add_score_grad(model, reference, 1.0, &mut grad);
        (g, grad)
    } else {
        (threshold - margin, grad)
    }
}

/// How the per-coordinate ratio in the volume loss is clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolClamp {
    /// `max(ratio, ε)`: keeps the log finite as coefficients grow.
    #[default]
    Floor,
    /// `min(ratio, ε)`, the form printed alongside the derivation.
    PaperLiteral,
}

fn vol_terms(params: &LinearParams, reference: &[f64]) -> Result<(f64, Vec<f64>), OptimError> {
    if reference.len() != params.coef.len() {
        return Err(OptimError::InvalidConfig("reference dimension does not match the model".into()));
    }
    let g_ref = params.logit(reference);
    if g_ref >= 0.0 {
        return Err(OptimError::ReferenceNotNegative);
    }
    let ratios = params.coef.iter().map(|b| (g_ref / b.abs().max(DENOMINATOR_EPS)).abs()).collect();
    Ok((g_ref, ratios))
}

/// `(1/p) Σ_j log(clamp(|g_ref(β) / β_j|, ε))` for a linear model.
pub fn loss_vol_opt(params: &LinearParams, reference: &[f64], eps: f64, clamp: VolClamp) -> Result<f64, OptimError> {
    Ok(vol_opt_grad(params, reference, eps, clamp)?.0)
}

/// Volume loss and its gradient over `[intercept, coef...]`.
pub fn vol_opt_grad(params: &LinearParams, reference: &[f64], eps: f64, clamp: VolClamp) -> Result<(f64, Vec<f64>), OptimError> {
    let (g_ref, ratios) = vol_terms(params, reference)?;
    let p = ratios.len().max(1) as f64;
    let mut grad = vec![0.0; params.coef.len() + 1];
    let mut value = 0.0;
    let mut active = 0usize;
    for (j, &r) in ratios.iter().enumerate() {
        let (v, live) = match clamp {
            VolClamp::Floor => (r.max(eps), r > eps),
            VolClamp::PaperLiteral => (r.min(eps), r < eps),
        };
        value += v.ln();
        if live {
            active += 1;
            // d log|β_j| / dβ_j, zero where the denominator floor is active
            let b = params.coef[j];
            if b.abs() > DENOMINATOR_EPS {
                grad[j + 1] -= 1.0 / (p * b);
            }
        }
    }
    // every live term carries d log|g_ref| = ∂g_ref / g_ref
    let s = active as f64 / (p * g_ref);
    grad[0] += s;
    for (gk, xk) in grad[1..].iter_mut().zip(reference) {
        *gk += s * xk;
    }
    Ok((value / p, grad))
}
