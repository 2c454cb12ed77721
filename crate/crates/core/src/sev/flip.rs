use super::{Hypercube, Predictor, SevError, VertexMask};

/// Aligns features with the reference one at a time in `ordering` and
/// returns how many were needed before the prediction turned negative.
pub fn flip_count<M: Predictor>(model: &M, cube: &Hypercube<'_>, ordering: &[usize]) -> Result<Option<usize>, SevError> {
    let p = cube.n_features();
    let mut seen = vec![false; p];
    if ordering.len() != p || !ordering.iter().all(|&j| j < p && !std::mem::replace(&mut seen[j], true)) {
        return Err(SevError::InvalidPermutation(p));
    }
    if model.input_dim() != cube.width() {
        return Err(SevError::DimensionMismatch { expected: model.input_dim(), found: cube.width() });
    }
    if !model.predict(cube.query) {
        return Err(SevError::QueryNotPositive);
    }
    let mut mask = VertexMask::ones(p);
    let mut buf = vec![0.0; cube.width()];
    for (k, &j) in ordering.iter().enumerate() {
        mask = mask.with(j, false);
        cube.point_into(mask, &mut buf);
        if !model.predict(&buf) {
            return Ok(Some(k + 1));
        }
    }
    Ok(None)
}
