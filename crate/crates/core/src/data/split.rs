use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::raw::RawDataset;
use super::DataError;

/// `round(x)` with halves rounded up.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Per-class test counts: the minority class gets `round_half_up(count * f)`,
/// the majority class absorbs the remainder of `round_half_up(n * f)`.
/// Returns `(negatives, positives)` in the test split.
pub fn stratified_test_counts(negatives: usize, positives: usize, test_fraction: f64) -> (usize, usize) {
    let total = round_half_up((negatives + positives) as f64 * test_fraction);
    if positives <= negatives {
        let pos = round_half_up(positives as f64 * test_fraction).min(positives);
        (total.saturating_sub(pos).min(negatives), pos)
    } else {
        let neg = round_half_up(negatives as f64 * test_fraction).min(negatives);
        (neg, total.saturating_sub(neg).min(positives))
    }
}

/// Row indices of the (train, test) partition. Both lists are sorted so the
/// splits keep the original row order.
pub fn stratified_indices(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidArgument(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    if neg.is_empty() || pos.is_empty() {
        return Err(DataError::SingleClassData);
    }
    let (n_neg, n_pos) = stratified_test_counts(neg.len(), pos.len(), test_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    neg.shuffle(&mut rng);
    pos.shuffle(&mut rng);
    let mut test: Vec<usize> = neg[..n_neg].iter().chain(&pos[..n_pos]).copied().collect();
    let mut train: Vec<usize> = neg[n_neg..].iter().chain(&pos[n_pos..]).copied().collect();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(raw: &RawDataset, test_fraction: f64, seed: u64) -> Result<(RawDataset, RawDataset), DataError> {
    let (train, test) = stratified_indices(&raw.labels, test_fraction, seed)?;
    Ok((raw.subset(&train), raw.subset(&test)))
}
