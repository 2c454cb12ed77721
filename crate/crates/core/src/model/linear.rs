use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Differentiable, ModelError};

/// `logit(x) = intercept + coef · x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearParams {
    /// Uniform(-1/sqrt(p), 1/sqrt(p)) for every entry.
    pub fn init<R: Rng>(p: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (p.max(1) as f64).sqrt();
        let intercept = rng.random_range(-bound..=bound);
        let coef = (0..p).map(|_| rng.random_range(-bound..=bound)).collect();
        Self { intercept, coef }
    }

    /// Raw (pre-sigmoid) score, dimension checked.
    pub fn raw_score(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.coef.len() {
            return Err(ModelError::DimensionMismatch { expected: self.coef.len(), found: x.len() });
        }
        Ok(self.logit(x))
    }

    /// The sign rule `1[raw > 0]`.
    pub fn predict_sign(&self, x: &[f64]) -> bool {
        self.logit(x) > 0.0
    }

    /// Multiplies intercept and coefficients by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self { intercept: self.intercept * lambda, coef: self.coef.iter().map(|b| b * lambda).collect() }
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.coef.is_empty() {
            return 0.0;
        }
        self.coef.iter().filter(|&&b| b == 0.0).count() as f64 / self.coef.len() as f64
    }
}

impl Differentiable for LinearParams {
    fn input_dim(&self) -> usize {
        self.coef.len()
    }

    #[inline]
    fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    fn n_params(&self) -> usize {
        self.coef.len() + 1
    }

    fn params(&self) -> Vec<f64> {
        std::iter::once(self.intercept).chain(self.coef.iter().copied()).collect()
    }

    fn set_params(&mut self, theta: &[f64]) {
        self.intercept = theta[0];
        self.coef.copy_from_slice(&theta[1..]);
    }

    fn logit_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        grad[0] += scale;
        for (g, v) in grad[1..].iter_mut().zip(x) {
            *g += scale * v;
        }
        self.logit(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn raw_score_examples() {
        let p = LinearParams { intercept: -1.0, coef: vec![1.0, 1.0] };
        assert_eq!(p.raw_score(&[0.0, 0.0]).unwrap(), -1.0);
        let x = [0.7, -0.2];
        assert!((p.scaled(3.0).raw_score(&x).unwrap() - 3.0 * p.raw_score(&x).unwrap()).abs() < 1e-12);
        assert!(p.raw_score(&[1.0]).is_err());
    }

    #[test]
    fn raw_score_matches_reverse_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..40);
            let p = LinearParams::init(n, &mut rng);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut oracle = 0.0;
            for j in (0..n).rev() {
                oracle += x[j] * p.coef[j];
            }
            oracle += p.intercept;
            assert!((p.raw_score(&x).unwrap() - oracle).abs() < 1e-12);
        }
    }
}
