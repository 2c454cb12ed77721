use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{sigmoid, Differentiable, ModelError};
use crate::data::EncodedDataset;

/// Regression tree stored as flat node arrays. Node `i` is a leaf when
/// `feature[i] < 0`; otherwise samples with `x[feature] <= split` go to
/// `left[i]`, the rest to `right[i]`. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub split: Vec<f64>,
    pub left: Vec<i32>,
    pub right: Vec<i32>,
    pub value: Vec<f64>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self { feature: vec![-1], split: vec![0.0], left: vec![-1], right: vec![-1], value: vec![value] }
    }

    fn push(&mut self, feature: i32, split: f64, value: f64) -> usize {
        self.feature.push(feature);
        self.split.push(split);
        self.left.push(-1);
        self.right.push(-1);
        self.value.push(value);
        self.feature.len() - 1
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            let f = self.feature[i];
            if f < 0 {
                return self.value[i];
            }
            i = if x[f as usize] <= self.split[i] { self.left[i] } else { self.right[i] } as usize;
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            if t.feature[i] < 0 {
                0
            } else {
                1 + go(t, t.left[i] as usize).max(go(t, t.right[i] as usize))
            }
        }
        go(self, 0)
    }

    /// Structural validity: consistent array lengths, children in range and
    /// strictly after their parent (so evaluation terminates).
    pub fn is_well_formed(&self, input_dim: usize) -> bool {
        let n = self.feature.len();
        if n == 0 || [self.split.len(), self.left.len(), self.right.len(), self.value.len()].iter().any(|&l| l != n) {
            return false;
        }
        (0..n).all(|i| {
            let f = self.feature[i];
            f < 0
                || ((f as usize) < input_dim
                    && [self.left[i], self.right[i]].iter().all(|&c| c > i as i32 && (c as usize) < n))
        })
    }
}

/// `logit(x) = intercept + Σ_t weights[t] * trees[t](x)`. Only the weights
/// and intercept are trainable; leaf values stay frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub input: usize,
    pub max_depth: usize,
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub trees: Vec<Tree>,
}

impl GbdtParams {
    pub fn split_features(&self) -> BTreeSet<usize> {
        self.trees
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w != 0.0)
            .flat_map(|(t, _)| t.feature.iter().filter(|&&f| f >= 0).map(|&f| f as usize))
            .collect()
    }
}

impl Differentiable for GbdtParams {
    fn input_dim(&self) -> usize {
        self.input
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.intercept + self.trees.iter().zip(&self.weights).map(|(t, w)| w * t.eval(x)).sum::<f64>()
    }

    fn n_params(&self) -> usize {
        self.weights.len() + 1
    }

    fn params(&self) -> Vec<f64> {
        std::iter::once(self.intercept).chain(self.weights.iter().copied()).collect()
    }

    fn set_params(&mut self, theta: &[f64]) {
        self.intercept = theta[0];
        self.weights.copy_from_slice(&theta[1..]);
    }

    fn logit_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        grad[0] += scale;
        let mut z = self.intercept;
        for ((t, w), g) in self.trees.iter().zip(&self.weights).zip(&mut grad[1..]) {
            let v = t.eval(x);
            *g += scale * v;
            z += w * v;
        }
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        Self { n_trees: 200, max_depth: 3, learning_rate: 0.1, min_samples_leaf: 1 }
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    data: &'a EncodedDataset,
    residual: Vec<f64>,
    hessian: Vec<f64>,
    config: GbdtConfig,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize]) -> Option<Split> {
        let n = idx.len();
        let min_leaf = self.config.min_samples_leaf.max(1);
        if n < 2 * min_leaf {
            return None;
        }
        let total: f64 = idx.iter().map(|&i| self.residual[i]).sum();
        let base = total * total / n as f64;
        let mut best: Option<Split> = None;
        let mut order = idx.to_vec();
        for f in 0..self.data.n_cols() {
            let x = |i: usize| self.data.row(i)[f];
            order.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.residual[order[k]];
                let (lo, hi) = (x(order[k]), x(order[k + 1]));
                let n_left = k + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64 - base;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split { feature: f, threshold: 0.5 * (lo + hi), gain });
                }
            }
        }
        best
    }

    fn leaf_value(&self, idx: &[usize]) -> f64 {
        let num: f64 = idx.iter().map(|&i| self.residual[i]).sum();
        let den: f64 = idx.iter().map(|&i| self.hessian[i]).sum();
        self.config.learning_rate * num / den.max(1e-12)
    }

    fn grow(&self, tree: &mut Tree, node: usize, idx: Vec<usize>, depth: usize) {
        if depth >= self.config.max_depth {
            return;
        }
        let Some(split) = self.best_split(&idx) else { return };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.data.row(i)[split.feature] <= split.threshold);
        tree.feature[node] = split.feature as i32;
        tree.split[node] = split.threshold;
        let li = tree.push(-1, 0.0, self.leaf_value(&l));
        let ri = tree.push(-1, 0.0, self.leaf_value(&r));
        tree.left[node] = li as i32;
        tree.right[node] = ri as i32;
        self.grow(tree, li, l, depth + 1);
        self.grow(tree, ri, r, depth + 1);
    }
}

/// Gradient boosting on the logistic loss with depth-limited regression
/// trees and Newton leaf values. All tree weights start at 1.
pub fn fit_gbdt(train: &EncodedDataset, config: &GbdtConfig, threshold: f64) -> Result<super::Classifier, ModelError> {
    let n = train.len();
    let pos = train.y.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == n {
        return Err(ModelError::SingleClassData);
    }
    let intercept = (pos as f64 / (n - pos) as f64).ln();
    let mut logits = vec![intercept; n];
    let mut builder = Builder { data: train, residual: vec![0.0; n], hessian: vec![0.0; n], config: *config };
    let mut trees = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        for i in 0..n {
            let p = sigmoid(logits[i]);
            builder.residual[i] = f64::from(train.y[i]) - p;
            builder.hessian[i] = p * (1.0 - p);
        }
        let all: Vec<usize> = (0..n).collect();
        let mut tree = Tree::leaf(builder.leaf_value(&all));
        builder.grow(&mut tree, 0, all, 0);
        for (i, z) in logits.iter_mut().enumerate() {
            *z += tree.eval(train.row(i));
        }
        trees.push(tree);
    }
    let params = GbdtParams {
        input: train.n_cols(),
        max_depth: config.max_depth,
        intercept,
        weights: vec![1.0; trees.len()],
        trees,
    };
    Ok(super::Classifier::new(super::ModelParams::Gbdt(params), threshold))
}
