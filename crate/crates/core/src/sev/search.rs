use serde::{Deserialize, Serialize};

use super::{Explanation, Hypercube, Predictor, SevError, SevKind, SevResult, VertexMask};

pub const BRUTE_FORCE_MAX_FEATURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchOptions {
    pub depth_limit: usize,
    pub max_explanations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { depth_limit: 6, max_explanations: 32 }
    }
}

fn check_endpoints<M: Predictor>(model: &M, cube: &Hypercube<'_>) -> Result<(), SevError> {
    if model.input_dim() != cube.width() {
        return Err(SevError::DimensionMismatch { expected: model.input_dim(), found: cube.width() });
    }
    if model.predict(cube.reference) {
        return Err(SevError::ReferenceNotNegative);
    }
    if !model.predict(cube.query) {
        return Err(SevError::QueryNotPositive);
    }
    Ok(())
}

fn validate_restricted(restricted: &[usize], p: usize) -> Result<Vec<bool>, SevError> {
    let mut pinned = vec![false; p];
    for &j in restricted {
        if j >= p {
            return Err(SevError::RestrictedSetInvalid(format!("feature index {j} out of range for {p} features")));
        }
        if pinned[j] {
            return Err(SevError::RestrictedSetInvalid(format!("feature index {j} listed twice")));
        }
        pinned[j] = true;
    }
    Ok(pinned)
}

/// Advances `c` to the next `k`-combination of `0..m` in lexicographic order.
fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let Some(i) = (0..k).rev().find(|&i| c[i] < m - k + i) else {
        return false;
    };
    c[i] += 1;
    for t in i + 1..k {
        c[t] = c[t - 1] + 1;
    }
    true
}

/// Level-by-level search from `start`, toggling bits drawn from `free`,
/// until some vertex predicts `target`.
fn bfs<M: Predictor>(model: &M, cube: &Hypercube<'_>, kind: SevKind, start: VertexMask, free: &[usize], target: bool, opts: &SearchOptions) -> SevResult {
    let m = free.len();
    let mut buf = vec![0.0; cube.width()];
    let mut expanded = 0;
    let mut explanations = Vec::new();
    for k in 1..=m.min(opts.depth_limit) {
        let mut combo: Vec<usize> = (0..k).collect();
        let mut found = false;
        loop {
            let mask = combo.iter().fold(start, |acc, &i| acc.with(free[i], !start.get(free[i])));
            cube.point_into(mask, &mut buf);
            expanded += 1;
            if model.predict(&buf) == target {
                found = true;
                if explanations.len() < opts.max_explanations {
                    explanations.push(Explanation { mask, changed: combo.iter().map(|&i| free[i]).collect() });
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
        if found {
            return SevResult { kind, value: Some(k), explanations, expanded, depth_limit_hit: false };
        }
    }
    SevResult { kind, value: None, explanations, expanded, depth_limit_hit: opts.depth_limit < m }
}

pub fn sev_plus<M: Predictor>(model: &M, cube: &Hypercube<'_>, opts: &SearchOptions) -> Result<SevResult, SevError> {
    check_endpoints(model, cube)?;
    let free: Vec<usize> = (0..cube.n_features()).collect();
    Ok(bfs(model, cube, SevKind::Plus, VertexMask::zeros(), &free, true, opts))
}

pub fn sev_minus<M: Predictor>(model: &M, cube: &Hypercube<'_>, opts: &SearchOptions) -> Result<SevResult, SevError> {
    check_endpoints(model, cube)?;
    let p = cube.n_features();
    let free: Vec<usize> = (0..p).collect();
    Ok(bfs(model, cube, SevKind::Minus, VertexMask::ones(p), &free, false, opts))
}

pub fn sev_restricted<M: Predictor>(model: &M, cube: &Hypercube<'_>, restricted: &[usize], opts: &SearchOptions) -> Result<SevResult, SevError> {
    let p = cube.n_features();
    let pinned = validate_restricted(restricted, p)?;
    check_endpoints(model, cube)?;
    let free: Vec<usize> = (0..p).filter(|&j| !pinned[j]).collect();
    Ok(bfs(model, cube, SevKind::Restricted, VertexMask::ones(p), &free, false, opts))
}

pub fn compute_sev<M: Predictor>(model: &M, cube: &Hypercube<'_>, kind: SevKind, restricted: &[usize], opts: &SearchOptions) -> Result<SevResult, SevError> {
    match kind {
        SevKind::Plus => sev_plus(model, cube, opts),
        SevKind::Minus => sev_minus(model, cube, opts),
        SevKind::Restricted => sev_restricted(model, cube, restricted, opts),
    }
}

/// Scores every vertex. No depth limit; explanations capped like the search.
pub fn brute_force_sev<M: Predictor>(model: &M, cube: &Hypercube<'_>, kind: SevKind, restricted: &[usize], max_explanations: usize) -> Result<SevResult, SevError> {
    let p = cube.n_features();
    if p > BRUTE_FORCE_MAX_FEATURES {
        return Err(SevError::TooManyFeatures { found: p, limit: BRUTE_FORCE_MAX_FEATURES });
    }
    let pinned = match kind {
        SevKind::Restricted => validate_restricted(restricted, p)?,
        _ => vec![false; p],
    };
    check_endpoints(model, cube)?;

    let mut owner = vec![0usize; cube.width()];
    for (j, s) in cube.groups.iter().enumerate() {
        owner[s.range()].fill(j);
    }
    let mut best: Option<usize> = None;
    let mut hits: Vec<(usize, u64)> = Vec::new();
    let mut x = vec![0.0; cube.width()];
    for bits in 0u64..1 << p {
        if (0..p).any(|j| pinned[j] && bits >> j & 1 == 0) {
            continue;
        }
        for (c, &j) in owner.iter().enumerate() {
            let b = (bits >> j & 1) as f64;
            x[c] = b * cube.query[c] + (1.0 - b) * cube.reference[c];
        }
        let pos = model.predict(&x);
        let (hit, dist) = match kind {
            SevKind::Plus => (pos, bits.count_ones() as usize),
            _ => (!pos, p - bits.count_ones() as usize),
        };
        if hit {
            hits.push((dist, bits));
            best = Some(best.map_or(dist, |b: usize| b.min(dist)));
        }
    }
    let mut explanations: Vec<Explanation> = match best {
        Some(d) => hits
            .into_iter()
            .filter(|&(dist, _)| dist == d)
            .map(|(_, bits)| {
                let changed = (0..p).filter(|&j| (bits >> j & 1 == 1) == (kind == SevKind::Plus)).collect();
                Explanation { mask: VertexMask(bits), changed }
            })
            .collect(),
        None => Vec::new(),
    };
    explanations.sort_by(|a, b| a.changed.cmp(&b.changed));
    explanations.truncate(max_explanations);
    Ok(SevResult { kind, value: best, explanations, expanded: 1 << p, depth_limit_hit: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Span;

    /// Truth table over the three unit features, indexed by mask bits.
    struct Table(Vec<bool>);

    impl Predictor for Table {
        fn input_dim(&self) -> usize {
            self.0.len().trailing_zeros() as usize
        }
        fn predict(&self, x: &[f64]) -> bool {
            let idx = x.iter().enumerate().fold(0, |acc, (j, &v)| acc | (usize::from(v > 0.5) << j));
            self.0[idx]
        }
    }

    fn table(positive: &[u64], p: usize) -> Table {
        let mut t = vec![false; 1 << p];
        for &m in positive {
            t[m as usize] = true;
        }
        Table(t)
    }

    fn unit_groups(p: usize) -> Vec<Span> {
        (0..p).map(|j| Span { start: j, end: j + 1 }).collect()
    }

    // bits: housing = 1, loan = 2, education = 4
    fn loan_model() -> Table {
        table(&[0b111, 0b010, 0b110, 0b011, 0b101], 3)
    }

    #[test]
    fn loan_example() {
        let g = unit_groups(3);
        let (q, r) = ([1.0; 3], [0.0; 3]);
        let cube = Hypercube::new(&q, &r, &g).unwrap();
        let m = loan_model();
        let plus = sev_plus(&m, &cube, &SearchOptions::default()).unwrap();
        assert_eq!(plus.value, Some(1));
        assert_eq!(plus.explanations.len(), 1);
        assert_eq!(plus.explanations[0].mask, VertexMask(0b010));
        let minus = sev_minus(&m, &cube, &SearchOptions::default()).unwrap();
        assert_eq!(minus.value, Some(2));
        let masks: Vec<u64> = minus.explanations.iter().map(|e| e.mask.0).collect();
        assert_eq!(masks, vec![0b100, 0b001]);
        assert_eq!(minus.explanations[0].changed, vec![0, 1]);
        for kind in [SevKind::Plus, SevKind::Minus] {
            let bf = brute_force_sev(&m, &cube, kind, &[], 32).unwrap();
            let bfs = compute_sev(&m, &cube, kind, &[], &SearchOptions::default()).unwrap();
            assert_eq!(bf.value, bfs.value);
            assert_eq!(bf.explanations, bfs.explanations);
        }
    }

    #[test]
    fn only_full_alignment() {
        let p = 5;
        let g = unit_groups(p);
        let (q, r) = (vec![1.0; p], vec![0.0; p]);
        let cube = Hypercube::new(&q, &r, &g).unwrap();
        let m = table(&[0b11111], p);
        assert_eq!(sev_plus(&m, &cube, &SearchOptions::default()).unwrap().value, Some(5));
        assert_eq!(sev_minus(&m, &cube, &SearchOptions::default()).unwrap().value, Some(1));
        let shallow = sev_plus(&m, &cube, &SearchOptions { depth_limit: 3, ..Default::default() }).unwrap();
        assert_eq!(shallow.value, None);
        assert!(shallow.depth_limit_hit);
    }

    #[test]
    fn single_bit() {
        let g = unit_groups(1);
        let cube = Hypercube::new(&[1.0], &[0.0], &g).unwrap();
        let m = table(&[1], 1);
        for kind in [SevKind::Plus, SevKind::Minus] {
            assert_eq!(brute_force_sev(&m, &cube, kind, &[], 32).unwrap().value, Some(1));
        }
    }

    #[test]
    fn restricted_edges() {
        let g = unit_groups(3);
        let (q, r) = ([1.0; 3], [0.0; 3]);
        let cube = Hypercube::new(&q, &r, &g).unwrap();
        let m = loan_model();
        let opts = SearchOptions::default();
        let all = sev_restricted(&m, &cube, &[0, 1, 2], &opts).unwrap();
        assert_eq!(all.value, None);
        assert!(!all.depth_limit_hit);
        assert_eq!(sev_restricted(&m, &cube, &[], &opts).unwrap().value, Some(2));
        // pinning loan keeps every vertex positive
        assert_eq!(sev_restricted(&m, &cube, &[1], &opts).unwrap().value, None);
        assert!(matches!(sev_restricted(&m, &cube, &[3], &opts), Err(SevError::RestrictedSetInvalid(_))));
        assert!(matches!(sev_restricted(&m, &cube, &[1, 1], &opts), Err(SevError::RestrictedSetInvalid(_))));
    }

    #[test]
    fn endpoint_errors() {
        let g = unit_groups(2);
        let cube = Hypercube::new(&[1.0, 1.0], &[0.0, 0.0], &g).unwrap();
        let ref_pos = table(&[0b00, 0b11], 2);
        assert_eq!(sev_plus(&ref_pos, &cube, &SearchOptions::default()), Err(SevError::ReferenceNotNegative));
        let q_neg = table(&[0b01], 2);
        assert_eq!(sev_minus(&q_neg, &cube, &SearchOptions::default()), Err(SevError::QueryNotPositive));
        let wide = unit_groups(21);
        let (q, r) = (vec![1.0; 21], vec![0.0; 21]);
        let big = Hypercube::new(&q, &r, &wide).unwrap();
        assert!(matches!(brute_force_sev(&ref_pos, &big, SevKind::Plus, &[], 32), Err(SevError::TooManyFeatures { .. })));
    }

    #[test]
    fn explanation_cap_keeps_value() {
        let p = 8;
        let g = unit_groups(p);
        let (q, r) = (vec![1.0; p], vec![0.0; p]);
        let cube = Hypercube::new(&q, &r, &g).unwrap();
        // positive iff at least two query features present: C(8,2) = 28 minimal masks
        let positives: Vec<u64> = (0u64..256).filter(|m| m.count_ones() >= 2).collect();
        let m = table(&positives, p);
        let res = sev_plus(&m, &cube, &SearchOptions { max_explanations: 5, ..Default::default() }).unwrap();
        assert_eq!(res.value, Some(2));
        assert_eq!(res.explanations.len(), 5);
        assert_eq!(res.explanations[0].changed, vec![0, 1]);
        assert_eq!(res.explanations[4].changed, vec![0, 5]);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while next_combination(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }
}
