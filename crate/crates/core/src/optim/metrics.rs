use serde::Serialize;

use super::OptimError;
use crate::data::EncodedDataset;
use crate::model::Classifier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub auc: f64,
}

pub fn accuracy(model: &Classifier, data: &EncodedDataset) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let hits = data.rows().zip(&data.y).filter(|(x, &y)| model.predict_unchecked(x) == (y == 1)).count();
    hits as f64 / data.len() as f64
}

/// Rank-based AUC; tied scores count one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, OptimError> {
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(OptimError::SingleClassData);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // average 1-based rank of the tie block
        let rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += rank * idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

pub fn evaluate(model: &Classifier, data: &EncodedDataset) -> Result<Metrics, OptimError> {
    let scores: Vec<f64> = data.rows().map(|x| model.score_unchecked(x)).collect();
    Ok(Metrics { accuracy: accuracy(model, data), auc: auc(&scores, &data.y)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    den += 1.0;
                    num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
                }
            }
        }
        num / den
    }

    #[test]
    fn edge_cases() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.2], &[1, 1]), Err(OptimError::SingleClassData));
    }

    proptest! {
        #[test]
        fn matches_pair_count(data in prop::collection::vec((0u8..20, any::<bool>()), 2..80)) {
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.0) / 20.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| u8::from(d.1)).collect();
            prop_assume!(labels.iter().any(|&y| y == 1) && labels.iter().any(|&y| y == 0));
            let a = auc(&scores, &labels).unwrap();
            prop_assert!((a - pairwise(&scores, &labels)).abs() < 1e-10);
        }
    }
}
