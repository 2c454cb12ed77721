//! Volume of the SEV⁺ ≥ 2 region for linear models.
//!
//! With `g_ref = β₀ + βᵀx̃ < 0`, the substitution
//! `x_j = x̃_j - u_j · g_ref / β_j` maps the unit cube in `u` onto a box in
//! which the model is positive iff `Σ u_j > 1`; no single coordinate can
//! reach that alone, so every positive point there has SEV⁺ ≥ 2 and the
//! negative corner has volume `1/p!`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::losses::DENOMINATOR_EPS;
use super::OptimError;
use crate::data::Span;
use crate::model::{Classifier, Differentiable, LinearParams, ModelParams};
use crate::sev::{sev_plus, Hypercube, SearchOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeReport {
    pub p: usize,
    pub product: f64,
    pub n_samples: usize,
    /// Fraction of sampled points that are positive with SEV⁺ ≥ 2.
    pub mc_fraction: f64,
    pub mc_stderr: f64,
    /// `1 - 1/p!`.
    pub expected: f64,
}

impl VolumeReport {
    pub fn z_score(&self) -> f64 {
        (self.mc_fraction - self.expected) / self.mc_stderr.max(f64::MIN_POSITIVE)
    }
}

/// Where Monte-Carlo samples are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleBox {
    /// The box spanned by the substitution above.
    Transformed,
    /// Explicit per-coordinate `(lo, hi)` bounds.
    Bounds(Vec<(f64, f64)>),
}

fn reference_logit(params: &LinearParams, reference: &[f64]) -> Result<f64, OptimError> {
    if reference.len() != params.coef.len() {
        return Err(OptimError::InvalidConfig("reference dimension does not match the model".into()));
    }
    let g = params.logit(reference);
    if g >= 0.0 {
        return Err(OptimError::ReferenceNotNegative);
    }
    Ok(g)
}

/// `∏_j |g_ref / β_j|`, zero coefficients floored at a small denominator.
pub fn volume_product(params: &LinearParams, reference: &[f64]) -> Result<f64, OptimError> {
    let g = reference_logit(params, reference)?;
    Ok(params.coef.iter().map(|b| (g / b.abs().max(DENOMINATOR_EPS)).abs()).product())
}

fn factorial(p: usize) -> f64 {
    (1..=p).map(|k| k as f64).product()
}

pub fn mc_volume_check(params: &LinearParams, reference: &[f64], sample_box: &SampleBox, n_samples: usize, seed: u64) -> Result<VolumeReport, OptimError> {
    let p = params.coef.len();
    if !(2..=6).contains(&p) {
        return Err(OptimError::DimensionTooLarge(p));
    }
    let product = volume_product(params, reference)?;
    let g = reference_logit(params, reference)?;
    let bounds: Vec<(f64, f64)> = match sample_box {
        SampleBox::Transformed => (0..p)
            .map(|j| {
                let end = reference[j] - g / params.coef[j].abs().max(DENOMINATOR_EPS).copysign(params.coef[j]);
                (reference[j].min(end), reference[j].max(end))
            })
            .collect(),
        SampleBox::Bounds(b) => {
            if b.len() != p {
                return Err(OptimError::InvalidConfig("box dimension does not match the model".into()));
            }
            b.clone()
        }
    };
    let model = Classifier::new(ModelParams::Linear(params.clone()), 0.5);
    let groups: Vec<Span> = (0..p).map(|j| Span { start: j, end: j + 1 }).collect();
    let opts = SearchOptions { depth_limit: 1, max_explanations: 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; p];
    let mut hits = 0usize;
    for _ in 0..n_samples {
        for (v, &(lo, hi)) in x.iter_mut().zip(&bounds) {
            *v = lo + (hi - lo) * rng.random::<f64>();
        }
        let cube = Hypercube::new(&x, reference, &groups).expect("unit groups");
        // positive with no single-feature SEV⁺ explanation
        if let Ok(r) = sev_plus(&model, &cube, &opts) {
            hits += usize::from(r.value.is_none());
        }
    }
    let n = n_samples.max(1) as f64;
    let frac = hits as f64 / n;
    Ok(VolumeReport {
        p,
        product,
        n_samples,
        mc_fraction: frac,
        mc_stderr: (frac * (1.0 - frac) / n).sqrt(),
        expected: 1.0 - 1.0 / factorial(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(b0: f64, coef: &[f64]) -> LinearParams {
        LinearParams { intercept: b0, coef: coef.to_vec() }
    }

    #[test]
    fn product_examples() {
        assert_eq!(volume_product(&lin(-1.0, &[1.0, 1.0]), &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(volume_product(&lin(-2.0, &[2.0, 4.0]), &[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(volume_product(&lin(1.0, &[1.0, 1.0]), &[0.0, 0.0]), Err(OptimError::ReferenceNotNegative));
        let zero = volume_product(&lin(-1.0, &[1.0, 0.0]), &[0.0, 0.0]).unwrap();
        assert_eq!(zero, 1.0 / DENOMINATOR_EPS);
    }

    #[test]
    fn dimension_guard() {
        let r = mc_volume_check(&lin(-1.0, &[1.0]), &[0.0], &SampleBox::Transformed, 10, 0);
        assert_eq!(r, Err(OptimError::DimensionTooLarge(1)));
    }

    #[test]
    fn canonical_p2_is_half() {
        let r = mc_volume_check(&lin(-1.0, &[1.0, 1.0]), &[0.0, 0.0], &SampleBox::Bounds(vec![(0.0, 1.0); 2]), 200_000, 9).unwrap();
        assert!(r.z_score().abs() < 4.0, "{r:?}");
        assert_eq!(r.expected, 0.5);
    }
}
