use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Differentiable;

pub const DEFAULT_HIDDEN: usize = 128;

/// Two fully connected rectifier layers of width `hidden`, then a single
/// logit. Weight matrices are row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub input: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

fn uniform<R: Rng>(n: usize, fan_in: usize, rng: &mut R) -> Vec<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
}

struct Activations {
    pre1: Vec<f64>,
    a1: Vec<f64>,
    pre2: Vec<f64>,
    a2: Vec<f64>,
}

impl MlpParams {
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            input,
            hidden,
            w1: uniform(hidden * input, input, rng),
            b1: uniform(hidden, input, rng),
            w2: uniform(hidden * hidden, hidden, rng),
            b2: uniform(hidden, hidden, rng),
            w3: uniform(hidden, hidden, rng),
            b3: uniform(1, hidden, rng)[0],
        }
    }

    pub fn shapes_valid(&self) -> bool {
        let h = self.hidden;
        self.w1.len() == h * self.input
            && self.b1.len() == h
            && self.w2.len() == h * h
            && self.b2.len() == h
            && self.w3.len() == h
    }

    fn forward(&self, x: &[f64]) -> (f64, Activations) {
        let h = self.hidden;
        let mut pre1 = self.b1.clone();
        for (k, row) in self.w1.chunks_exact(self.input.max(1)).enumerate().take(h) {
            pre1[k] += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        let a1: Vec<f64> = pre1.iter().map(|&v| v.max(0.0)).collect();
        let mut pre2 = self.b2.clone();
        for (k, row) in self.w2.chunks_exact(h).enumerate() {
            pre2[k] += row.iter().zip(&a1).map(|(w, v)| w * v).sum::<f64>();
        }
        let a2: Vec<f64> = pre2.iter().map(|&v| v.max(0.0)).collect();
        let z = self.b3 + self.w3.iter().zip(&a2).map(|(w, v)| w * v).sum::<f64>();
        (z, Activations { pre1, a1, pre2, a2 })
    }

    /// Smallest |pre-activation| over both hidden layers; gradient checks stay
    /// away from the rectifier kinks using this.
    pub fn min_abs_preactivation(&self, x: &[f64]) -> f64 {
        let (_, act) = self.forward(x);
        act.pre1.iter().chain(&act.pre2).fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn input_column_used(&self, c: usize) -> bool {
        (0..self.hidden).any(|k| self.w1[k * self.input + c] != 0.0)
    }
}

impl Differentiable for MlpParams {
    fn input_dim(&self) -> usize {
        self.input
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.forward(x).0
    }

    fn n_params(&self) -> usize {
        let h = self.hidden;
        h * self.input + h + h * h + h + h + 1
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b2);
        out.extend_from_slice(&self.w3);
        out.push(self.b3);
        out
    }

    fn set_params(&mut self, theta: &[f64]) {
        let mut rest = theta;
        for buf in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2, &mut self.w3] {
            let (head, tail) = rest.split_at(buf.len());
            buf.copy_from_slice(head);
            rest = tail;
        }
        self.b3 = rest[0];
    }

    fn logit_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let h = self.hidden;
        let p = self.input;
        let (z, act) = self.forward(x);
        let (gw1, rest) = grad.split_at_mut(h * p);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, rest) = rest.split_at_mut(h * h);
        let (gb2, rest) = rest.split_at_mut(h);
        let (gw3, gb3) = rest.split_at_mut(h);

        gb3[0] += scale;
        // rectifier derivative at exactly 0 is taken as 0
        let mut d2 = vec![0.0; h];
        for k in 0..h {
            gw3[k] += scale * act.a2[k];
            if act.pre2[k] > 0.0 {
                d2[k] = scale * self.w3[k];
            }
        }
        let mut d1 = vec![0.0; h];
        for (k, &dk) in d2.iter().enumerate() {
            if dk == 0.0 {
                continue;
            }
            gb2[k] += dk;
            let row = &self.w2[k * h..(k + 1) * h];
            let grow = &mut gw2[k * h..(k + 1) * h];
            for i in 0..h {
                grow[i] += dk * act.a1[i];
                d1[i] += dk * row[i];
            }
        }
        for (k, d) in d1.iter().enumerate() {
            if act.pre1[k] <= 0.0 || *d == 0.0 {
                continue;
            }
            gb1[k] += d;
            for (g, v) in gw1[k * p..(k + 1) * p].iter_mut().zip(x) {
                *g += d * v;
            }
        }
        z
    }
}
