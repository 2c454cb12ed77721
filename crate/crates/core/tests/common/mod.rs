//! Random instances and invariant checks shared by the property suite and
//! the acceptance runner. Each `check_*` draws one case from `rng` and
//! returns a description of the first violation.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sevkit::data::{encode, stratified_indices, EncodedDataset, FeatureKind, FeatureSchema, FeatureSpace, FeatureSpec, RawDataset, RawValue};
use sevkit::model::{Classifier, Differentiable, GbdtParams, LinearParams, MlpParams, ModelParams, Tree};
use sevkit::sev::{brute_force_sev, compute_sev, flip_count, sev_minus, sev_restricted, vertex_to_point, Hypercube, SearchOptions, SevKind, SevResult, VertexMask};

pub type Check = Result<(), String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Linear,
    Mlp,
    Gbdt,
}

pub const FAMILIES: [Family; 3] = [Family::Linear, Family::Mlp, Family::Gbdt];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_schema(rng: &mut impl Rng, p: usize) -> FeatureSchema {
    let features = (0..p)
        .map(|j| match rng.random_range(0..3) {
            0 => FeatureSpec::numeric(format!("n{j}")),
            1 => FeatureSpec::binary(format!("b{j}"), "no", "yes"),
            _ => {
                let k = rng.random_range(3..=4);
                FeatureSpec::categorical(format!("c{j}"), (0..k).map(|l| format!("l{l}")))
            }
        })
        .collect();
    FeatureSchema::new("y", "1", features).unwrap()
}

pub fn random_space(rng: &mut impl Rng, p: usize) -> FeatureSpace {
    FeatureSpace::with_identity_stats(random_schema(rng, p))
}

/// A valid encoded point: numeric columns Gaussian, one-hot groups with one hot column.
pub fn random_point(rng: &mut impl Rng, space: &FeatureSpace) -> Vec<f64> {
    let mut x = vec![0.0; space.encoded_width()];
    for (f, s) in space.schema.features.iter().zip(&space.groups) {
        match f.kind {
            FeatureKind::Numeric => x[s.start] = normal(rng),
            FeatureKind::Binary { .. } => x[s.start] = f64::from(u8::from(rng.random_bool(0.5))),
            FeatureKind::Categorical { .. } => x[s.start + rng.random_range(0..s.len())] = 1.0,
        }
    }
    x
}

fn grow(rng: &mut impl Rng, t: &mut Tree, width: usize, depth: usize) -> i32 {
    let i = t.feature.len();
    t.feature.push(-1);
    t.split.push(0.0);
    t.left.push(-1);
    t.right.push(-1);
    t.value.push(normal(rng));
    if depth > 0 && rng.random_bool(0.8) {
        t.feature[i] = rng.random_range(0..width) as i32;
        t.split[i] = if rng.random_bool(0.5) { 0.5 } else { normal(rng) };
        let l = grow(rng, t, width, depth - 1);
        let r = grow(rng, t, width, depth - 1);
        t.left[i] = l;
        t.right[i] = r;
    }
    i as i32
}

pub fn random_gbdt(rng: &mut impl Rng, width: usize) -> GbdtParams {
    let n_trees = rng.random_range(1..=6);
    let trees: Vec<Tree> = (0..n_trees)
        .map(|_| {
            let mut t = Tree { feature: vec![], split: vec![], left: vec![], right: vec![], value: vec![] };
            grow(rng, &mut t, width, 3);
            t
        })
        .collect();
    GbdtParams {
        input: width,
        max_depth: 3,
        intercept: 0.5 * normal(rng),
        weights: (0..n_trees).map(|_| 1.0 + 0.5 * normal(rng)).collect(),
        trees,
    }
}

pub fn random_params(rng: &mut impl Rng, family: Family, width: usize) -> ModelParams {
    match family {
        Family::Linear => ModelParams::Linear(LinearParams { intercept: normal(rng), coef: (0..width).map(|_| normal(rng)).collect() }),
        Family::Mlp => {
            let mut m = MlpParams::init(width, 8, rng);
            // wider weights than the default init so decisions vary across the cube
            for w in m.w1.iter_mut().chain(m.w2.iter_mut()).chain(m.w3.iter_mut()) {
                *w *= 3.0;
            }
            ModelParams::Mlp(m)
        }
        Family::Gbdt => ModelParams::Gbdt(random_gbdt(rng, width)),
    }
}

/// A model, query and reference with `f(reference) = 0` and `f(query) = 1`.
pub struct Instance {
    pub space: FeatureSpace,
    pub model: Classifier,
    pub query: Vec<f64>,
    pub reference: Vec<f64>,
}

impl Instance {
    pub fn cube(&self) -> Hypercube<'_> {
        Hypercube::new(&self.query, &self.reference, &self.space.groups).unwrap()
    }

    pub fn p(&self) -> usize {
        self.space.n_features()
    }
}

pub fn random_instance(rng: &mut impl Rng, family: Family, p_max: usize) -> Instance {
    loop {
        let p = rng.random_range(1..=p_max);
        let space = random_space(rng, p);
        let w = space.encoded_width();
        let mut model = Classifier::new(random_params(rng, family, w), 0.5);
        let mut a = random_point(rng, &space);
        let mut b = random_point(rng, &space);
        let (mut sa, mut sb) = (model.score_unchecked(&a), model.score_unchecked(&b));
        if sa == sb {
            continue;
        }
        if sa < sb {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut sa, &mut sb);
        }
        // a threshold strictly between the two scores
        model.threshold = sb + (sa - sb) * rng.random_range(0.05..0.95);
        if model.predict_unchecked(&a) && !model.predict_unchecked(&b) {
            return Instance { space, model, query: a, reference: b };
        }
    }
}

pub fn random_restricted(rng: &mut impl Rng, p: usize) -> Vec<usize> {
    let mut r: Vec<usize> = (0..p).filter(|_| rng.random_bool(0.3)).collect();
    r.shuffle(rng);
    r
}

fn exact(p: usize) -> SearchOptions {
    SearchOptions { depth_limit: p.max(1), max_explanations: 32 }
}

fn describe(r: &SevResult) -> String {
    format!("value {:?}, {} explanations", r.value, r.explanations.len())
}

/// BFS and exhaustive enumeration agree on value and explanation list.
pub fn check_oracle(rng: &mut impl Rng, family: Family, p_max: usize) -> Check {
    let inst = random_instance(rng, family, p_max);
    let cube = inst.cube();
    let restricted = random_restricted(rng, inst.p());
    for kind in [SevKind::Plus, SevKind::Minus, SevKind::Restricted] {
        let bfs = compute_sev(&inst.model, &cube, kind, &restricted, &exact(inst.p())).map_err(|e| e.to_string())?;
        let brute = brute_force_sev(&inst.model, &cube, kind, &restricted, 32).map_err(|e| e.to_string())?;
        if bfs.value != brute.value || bfs.explanations != brute.explanations {
            return Err(format!("{family:?} {kind} p={}: bfs {} vs brute {}", inst.p(), describe(&bfs), describe(&brute)));
        }
    }
    Ok(())
}

fn start_and_target(kind: SevKind, p: usize) -> (VertexMask, bool) {
    match kind {
        SevKind::Plus => (VertexMask::zeros(), true),
        _ => (VertexMask::ones(p), false),
    }
}

/// Every returned explanation flips the prediction, and nothing at a
/// shorter distance does.
pub fn check_rescoring_and_minimality(rng: &mut impl Rng, family: Family) -> Check {
    let inst = random_instance(rng, family, 10);
    let cube = inst.cube();
    let p = inst.p();
    let restricted = random_restricted(rng, p);
    for kind in [SevKind::Plus, SevKind::Minus, SevKind::Restricted] {
        let r = compute_sev(&inst.model, &cube, kind, &restricted, &exact(p)).map_err(|e| e.to_string())?;
        let (start, target) = start_and_target(kind, p);
        for e in &r.explanations {
            let x = cube.point(e.mask);
            if inst.model.predict_unchecked(&x) != target {
                return Err(format!("{kind}: explanation {:b} does not flip", e.mask.0));
            }
            if (e.mask.0 ^ start.0).count_ones() as usize != r.value.unwrap() {
                return Err(format!("{kind}: explanation length differs from value"));
            }
        }
        let Some(v) = r.value else { continue };
        for m in 0..1u64 << p {
            let mask = VertexMask(m);
            let d = (m ^ start.0).count_ones() as usize;
            let moves_pinned = kind == SevKind::Restricted && restricted.iter().any(|&j| mask.get(j) != start.get(j));
            if d < v && !moves_pinned && inst.model.predict_unchecked(&cube.point(mask)) == target {
                return Err(format!("{kind}: mask {m:b} at distance {d} flips but value is {v}"));
            }
        }
    }
    Ok(())
}

fn rank(v: Option<usize>) -> usize {
    v.unwrap_or(usize::MAX)
}

/// SEV® ≥ SEV⁻, and growing the restricted set never lowers the value.
pub fn check_restriction_monotonicity(rng: &mut impl Rng, family: Family) -> Check {
    let inst = random_instance(rng, family, 10);
    let cube = inst.cube();
    let p = inst.p();
    let minus = sev_minus(&inst.model, &cube, &exact(p)).map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut prev = rank(minus.value);
    for k in 0..=p {
        let r = sev_restricted(&inst.model, &cube, &order[..k], &exact(p)).map_err(|e| e.to_string())?;
        if rank(r.value) < prev {
            return Err(format!("restricting {:?} lowered the value to {:?}", &order[..k], r.value));
        }
        prev = rank(r.value);
    }
    if prev != usize::MAX {
        return Err("restricting every feature still explained the query".into());
    }
    Ok(())
}

/// Raising the depth limit never raises the value or un-explains a query.
pub fn check_depth_monotonicity(rng: &mut impl Rng, family: Family) -> Check {
    let inst = random_instance(rng, family, 10);
    let cube = inst.cube();
    let restricted = random_restricted(rng, inst.p());
    for kind in [SevKind::Plus, SevKind::Minus, SevKind::Restricted] {
        let mut prev: Option<Option<usize>> = None;
        for d in 1..=inst.p() + 1 {
            let r = compute_sev(&inst.model, &cube, kind, &restricted, &SearchOptions { depth_limit: d, max_explanations: 4 }).map_err(|e| e.to_string())?;
            if let Some(pv) = prev {
                if rank(r.value) > rank(pv) || (pv.is_some() && r.value.is_none()) {
                    return Err(format!("{kind}: depth {d} gave {:?} after {:?}", r.value, pv));
                }
            }
            prev = Some(r.value);
        }
    }
    Ok(())
}

/// Flip counts under any ordering are at least SEV⁻; an ordering that
/// starts with a SEV⁻ explanation attains it.
pub fn check_flip_count(rng: &mut impl Rng, family: Family) -> Check {
    let inst = random_instance(rng, family, 10);
    let cube = inst.cube();
    let p = inst.p();
    let minus = sev_minus(&inst.model, &cube, &exact(p)).map_err(|e| e.to_string())?;
    let v = minus.value.ok_or("full-depth SEV⁻ left the query unexplained")?;
    for _ in 0..5 {
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(rng);
        let f = flip_count(&inst.model, &cube, &order).map_err(|e| e.to_string())?.ok_or("never flipped")?;
        if f < v {
            return Err(format!("flip count {f} below SEV⁻ {v} for {order:?}"));
        }
    }
    let e = &minus.explanations[0];
    let mut order = e.changed.clone();
    order.extend((0..p).filter(|j| !e.changed.contains(j)));
    let f = flip_count(&inst.model, &cube, &order).map_err(|e| e.to_string())?;
    if f != Some(v) {
        return Err(format!("explanation-first ordering gave {f:?}, SEV⁻ is {v}"));
    }
    Ok(())
}

/// The all-ones vertex is the query, the all-zeros vertex the reference,
/// and both SEVs are at least one.
pub fn check_endpoints(rng: &mut impl Rng, family: Family) -> Check {
    let inst = random_instance(rng, family, 12);
    let g = &inst.space.groups;
    let p = inst.p();
    if vertex_to_point(&vec![true; p], &inst.query, &inst.reference, g).unwrap() != inst.query {
        return Err("all-ones vertex is not the query".into());
    }
    if vertex_to_point(&vec![false; p], &inst.query, &inst.reference, g).unwrap() != inst.reference {
        return Err("all-zeros vertex is not the reference".into());
    }
    let cube = inst.cube();
    for kind in [SevKind::Plus, SevKind::Minus] {
        let r = compute_sev(&inst.model, &cube, kind, &[], &exact(p)).map_err(|e| e.to_string())?;
        if r.value.is_some_and(|v| v < 1) {
            return Err(format!("{kind} value {:?}", r.value));
        }
    }
    Ok(())
}

/// Random labelled rows in `space`.
pub fn random_dataset(rng: &mut impl Rng, space: &FeatureSpace, n: usize) -> EncodedDataset {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_point(rng, space)).collect();
    let y = (0..n).map(|i| (i % 2) as u8).collect();
    EncodedDataset::from_rows(space.clone(), rows, y)
}

/// A random raw dataset over `schema` with both classes present.
pub fn random_raw(rng: &mut impl Rng, schema: &FeatureSchema, n: usize) -> RawDataset {
    let rows = (0..n)
        .map(|_| {
            schema
                .features
                .iter()
                .map(|f| match &f.kind {
                    FeatureKind::Numeric => RawValue::Num(10.0 * normal(rng) + 3.0),
                    FeatureKind::Binary { .. } => RawValue::Level(rng.random_range(0..2)),
                    FeatureKind::Categorical { levels } => RawValue::Level(rng.random_range(0..levels.len())),
                })
                .collect()
        })
        .collect();
    let labels = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    RawDataset { rows, labels }
}

/// Decoding an encoding gives the raw rows back; splits repeat under a
/// fixed seed; the reference is a valid point of the space.
pub fn check_data_round_trip(rng: &mut impl Rng) -> Check {
    let p = rng.random_range(1..=8);
    let schema = random_schema(rng, p);
    let n = rng.random_range(6..60);
    let raw = random_raw(rng, &schema, n);
    let enc = encode(&raw, &schema, None).map_err(|e| e.to_string())?;
    let back = enc.decode();
    for (a, b) in raw.rows.iter().flatten().zip(back.rows.iter().flatten()) {
        let ok = match (a, b) {
            (RawValue::Num(x), RawValue::Num(y)) => (x - y).abs() <= 1e-9 * x.abs().max(1.0),
            _ => a == b,
        };
        if !ok {
            return Err(format!("decoded {b:?}, raw {a:?}"));
        }
    }
    let seed = rng.random();
    let first = stratified_indices(&raw.labels, 0.2, seed).map_err(|e| e.to_string())?;
    if stratified_indices(&raw.labels, 0.2, seed).map_err(|e| e.to_string())? != first {
        return Err("split differs across runs".into());
    }
    let r = sevkit::data::build_reference(&enc).map_err(|e| e.to_string())?;
    if !enc.space.is_valid_point(&r.values) {
        return Err("reference is not a valid encoded point".into());
    }
    Ok(())
}

pub fn unit_groups(p: usize) -> Vec<sevkit::data::Span> {
    (0..p).map(|j| sevkit::data::Span { start: j, end: j + 1 }).collect()
}

/// Central finite difference of `f` at `theta`.
pub fn finite_difference(theta: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            t[k] = theta[k] + h;
            let up = f(&t);
            t[k] = theta[k] - h;
            let down = f(&t);
            t[k] = theta[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a - b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

pub fn with_params(model: &Classifier, theta: &[f64]) -> Classifier {
    let mut m = model.clone();
    m.params.set_params(theta);
    m
}

/// Smallest rectifier pre-activation magnitude over `points` (infinite for
/// families without rectifiers).
pub fn kink_margin(model: &Classifier, points: &[&[f64]]) -> f64 {
    match &model.params {
        ModelParams::Mlp(m) => points.iter().map(|x| m.min_abs_preactivation(x)).fold(f64::INFINITY, f64::min),
        _ => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Bce,
    AllOptPlus,
    AllOptMinus,
    AllOptRestricted,
    PosBase,
    VolOpt,
    /// BCE plus the minus loss plus the reference penalty.
    Total,
}

pub const LOSSES: [Loss; 7] = [Loss::Bce, Loss::AllOptPlus, Loss::AllOptMinus, Loss::AllOptRestricted, Loss::PosBase, Loss::VolOpt, Loss::Total];

pub const MARGIN: f64 = 0.05;

/// A batch of rows, labels and a reference together with the model.
pub struct LossCase {
    pub inst: Instance,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub restricted: Vec<usize>,
}

impl LossCase {
    pub fn positives<'a>(&'a self, model: &Classifier) -> Vec<&'a [f64]> {
        self.rows.iter().filter(|x| model.predict_unchecked(x)).map(Vec::as_slice).collect()
    }

    pub fn eval(&self, model: &Classifier, loss: Loss) -> Result<(f64, Vec<f64>), String> {
        use sevkit::optim::losses::*;
        let groups = &self.inst.space.groups;
        let r = &self.inst.reference;
        let t = model.threshold;
        let pos = self.positives(model);
        let res = match loss {
            Loss::Bce => {
                let batch = Batch { rows: self.rows.iter().map(Vec::as_slice).collect(), labels: self.labels.clone() };
                Ok(bce_grad(model, &batch))
            }
            Loss::AllOptPlus => allopt_plus_grad(model, &pos, r, groups, t),
            Loss::AllOptMinus => allopt_minus_grad(model, &pos, r, groups, t),
            Loss::AllOptRestricted => allopt_restricted_grad(model, &pos, r, groups, &self.restricted, t),
            Loss::PosBase => Ok(pos_base_grad(model, r, t, MARGIN)),
            Loss::VolOpt => match &model.params {
                ModelParams::Linear(lp) => vol_opt_grad(lp, r, 1e-6, VolClamp::Floor),
                _ => return Err("volume loss on a non-linear model".into()),
            },
            Loss::Total => {
                let batch = Batch { rows: self.rows.iter().map(Vec::as_slice).collect(), labels: self.labels.clone() };
                let config = sevkit::optim::TrainConfig { c1: 1.0, c2: 10.0, margin: MARGIN, threshold: t, ..Default::default() };
                sevkit::optim::objective_grad(model, &batch, r, groups, &config, sevkit::optim::SevTerm::AllOptMinus).map(|(v, g)| (v.total, g))
            }
        };
        res.map_err(|e| e.to_string())
    }
}

pub fn random_loss_case(rng: &mut impl Rng, family: Family, p_max: usize) -> LossCase {
    let inst = random_instance(rng, family, p_max);
    let n = rng.random_range(4..24);
    let mut rows: Vec<Vec<f64>> = (0..n).map(|_| random_point(rng, &inst.space)).collect();
    rows.push(inst.query.clone());
    let labels = (0..rows.len()).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let mut restricted = random_restricted(rng, inst.p());
    if restricted.len() == inst.p() {
        restricted.pop();
    }
    LossCase { inst, rows, labels, restricted }
}

/// Points at which the model is evaluated by `loss`, to test for kinks.
fn evaluated_points(case: &LossCase, loss: Loss) -> Vec<Vec<f64>> {
    let model = &case.inst.model;
    let groups = &case.inst.space.groups;
    let r = &case.inst.reference;
    let mut pts = vec![r.clone()];
    match loss {
        Loss::Bce => pts.extend(case.rows.iter().cloned()),
        Loss::AllOptPlus | Loss::AllOptMinus | Loss::AllOptRestricted => {
            for q in case.positives(model) {
                pts.push(q.to_vec());
                let cube = Hypercube::new(q, r, groups).unwrap();
                let p = groups.len();
                for j in 0..p {
                    let mask = if loss == Loss::AllOptPlus { VertexMask::zeros().with(j, true) } else { VertexMask::ones(p).with(j, false) };
                    pts.push(cube.point(mask));
                }
            }
        }
        Loss::PosBase | Loss::VolOpt | Loss::Total => {}
    }
    pts
}

/// True when the loss is smooth in a neighbourhood of the current parameters.
fn smooth_here(case: &LossCase, loss: Loss) -> bool {
    if loss == Loss::Total {
        return [Loss::Bce, Loss::AllOptMinus, Loss::PosBase].into_iter().all(|l| smooth_here(case, l));
    }
    let model = &case.inst.model;
    let t = model.threshold;
    let pts = evaluated_points(case, loss);
    let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
    if kink_margin(model, &refs) < 1e-3 {
        return false;
    }
    let scores: Vec<f64> = pts.iter().map(|x| model.score_unchecked(x)).collect();
    match loss {
        Loss::Bce => scores.iter().all(|s| *s > 1e-6 && *s < 1.0 - 1e-6),
        Loss::PosBase => (scores[0] - (t - MARGIN)).abs() > 1e-3,
        Loss::VolOpt => match &model.params {
            ModelParams::Linear(lp) => lp.coef.iter().all(|b| b.abs() > 1e-3) && model.params.logit(&case.inst.reference) < -1e-3,
            _ => false,
        },
        _ => {
            if scores.iter().any(|s| (s - t).abs() < 1e-3) {
                return false;
            }
            // the selected one-flip vertex must win by a clear gap, among free features
            let p = case.inst.p();
            let free: Vec<usize> = if loss == Loss::AllOptRestricted { (0..p).filter(|j| !case.restricted.contains(j)).collect() } else { (0..p).collect() };
            scores[1..].chunks(p + 1).all(|c| {
                let mut s: Vec<f64> = free.iter().map(|&j| c[1 + j]).collect();
                s.sort_by(f64::total_cmp);
                s.windows(2).all(|w| w[1] - w[0] > 1e-4)
            })
        }
    }
}

/// Compares the analytic gradient with central differences. `Ok(false)`
/// means the drawn case sits too close to a kink and was skipped.
pub fn check_gradient(rng: &mut impl Rng, family: Family, loss: Loss) -> Result<bool, String> {
    let family = if loss == Loss::VolOpt { Family::Linear } else { family };
    let case = random_loss_case(rng, family, 6);
    if !smooth_here(&case, loss) {
        return Ok(false);
    }
    let model = &case.inst.model;
    let Ok((_, grad)) = case.eval(model, loss) else { return Ok(false) };
    let theta = model.params.params();
    let fd = finite_difference(&theta, 1e-6, |t| case.eval(&with_params(model, t), loss).map(|v| v.0).unwrap_or(f64::NAN));
    if fd.iter().any(|v| !v.is_finite()) {
        return Ok(false);
    }
    let err = relative_error(&grad, &fd);
    if err >= 1e-4 {
        return Err(format!("{family:?} {loss:?}: relative error {err:.3e}"));
    }
    Ok(true)
}

/// Loss values stay in their documented ranges; the restricted loss with
/// nothing restricted is the minus loss; the reference penalty is at least `T - θ`.
pub fn check_loss_bounds(rng: &mut impl Rng, family: Family) -> Check {
    let mut case = random_loss_case(rng, family, 8);
    let model = &case.inst.model;
    let t = model.threshold;
    let (plus, _) = case.eval(model, Loss::AllOptPlus)?;
    // a mean of terms equal to T can round a few ulps past T
    let tol = 1e-12;
    if !(plus >= -t - tol && plus <= 0.0) {
        return Err(format!("plus loss {plus} outside [-T, 0]"));
    }
    let minus = case.eval(model, Loss::AllOptMinus)?;
    if !(minus.0 >= t - tol && minus.0 <= 1.0 + tol) {
        return Err(format!("minus loss {} outside [T, 1] with T = {t}", minus.0));
    }
    case.restricted.clear();
    let restricted = case.eval(model, Loss::AllOptRestricted)?;
    if restricted.0.to_bits() != minus.0.to_bits() || restricted.1.iter().zip(&minus.1).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err("restricted loss with an empty set differs from the minus loss".into());
    }
    let (pb, _) = case.eval(model, Loss::PosBase)?;
    if pb < t - MARGIN {
        return Err(format!("reference penalty {pb} below T - θ"));
    }
    Ok(())
}

pub fn check_serialization(rng: &mut impl Rng, family: Family) -> Check {
    let inst = random_instance(rng, family, 10);
    let back = sevkit::model::deserialize(&sevkit::model::serialize(&inst.model)).map_err(|e| e.to_string())?;
    if back != inst.model {
        return Err(format!("{family:?} model changed across a round trip"));
    }
    let space = sevkit::data::persist::space_from_json(&sevkit::data::persist::space_to_json(&inst.space)).map_err(|e| e.to_string())?;
    if space != inst.space {
        return Err("space changed across a round trip".into());
    }
    let reference = sevkit::data::Reference::new(inst.reference.clone());
    let back = sevkit::data::persist::reference_from_json(&sevkit::data::persist::reference_to_json(&reference, &inst.space)).map_err(|e| e.to_string())?;
    if back != reference {
        return Err("reference changed across a round trip".into());
    }
    let config = sevkit::optim::TrainConfig { c1: rng.random(), seed: rng.random(), restricted: random_restricted(rng, 5), ..Default::default() };
    let back: sevkit::optim::TrainConfig = serde_json::from_str(&serde_json::to_string(&config).unwrap()).map_err(|e| e.to_string())?;
    if back != config {
        return Err("training config changed across a round trip".into());
    }
    Ok(())
}

/// Scores are finite and inside [0, 1] for arbitrary, wide inputs.
pub fn check_score_bounds(rng: &mut impl Rng, family: Family, n: usize) -> Check {
    let w = rng.random_range(1..12);
    let model = Classifier::new(random_params(rng, family, w), 0.5);
    for _ in 0..n {
        let scale = 10f64.powi(rng.random_range(-2..4));
        let x: Vec<f64> = (0..w).map(|_| scale * normal(rng)).collect();
        let s = model.score_unchecked(&x);
        if !(0.0..=1.0).contains(&s) {
            return Err(format!("{family:?} score {s} for {x:?}"));
        }
    }
    Ok(())
}

/// Doubling every tree weight and the intercept doubles the logit exactly.
pub fn check_gbdt_doubling(rng: &mut impl Rng) -> Check {
    let w = rng.random_range(1..12);
    let g = random_gbdt(rng, w);
    let mut d = g.clone();
    d.intercept *= 2.0;
    d.weights.iter_mut().for_each(|v| *v *= 2.0);
    let (a, b) = (ModelParams::Gbdt(g), ModelParams::Gbdt(d));
    for _ in 0..50 {
        let x: Vec<f64> = (0..w).map(|_| normal(rng)).collect();
        if b.logit(&x) != 2.0 * a.logit(&x) {
            return Err(format!("doubled logit {} vs {}", b.logit(&x), 2.0 * a.logit(&x)));
        }
    }
    Ok(())
}

/// Positive rescaling of a linear model keeps its decisions, its one-flip
/// selections away from ties, and its volume product.
pub fn check_linear_scaling(rng: &mut impl Rng) -> Check {
    let inst = random_instance(rng, Family::Linear, 6);
    let ModelParams::Linear(lp) = &inst.model.params else { unreachable!() };
    let lambda = 10f64.powf(rng.random_range(-1.0..1.0));
    let scaled = lp.scaled(lambda);
    let a = Classifier::new(ModelParams::Linear(lp.clone()), 0.5);
    let b = Classifier::new(ModelParams::Linear(scaled.clone()), 0.5);
    let groups = &inst.space.groups;
    let rows: Vec<Vec<f64>> = (0..20).map(|_| random_point(rng, &inst.space)).collect();
    for x in &rows {
        if a.params.logit(x).abs() > 1e-9 && a.predict_unchecked(x) != b.predict_unchecked(x) {
            return Err(format!("scaling by {lambda} changed a decision"));
        }
    }
    let pos: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let r = &inst.reference;
    for plus in [true, false] {
        let ea = sevkit::optim::losses::one_flip_extremes(&a, &pos, r, groups, plus);
        let eb = sevkit::optim::losses::one_flip_extremes(&b, &pos, r, groups, plus);
        for ((q, x), y) in pos.iter().zip(&ea).zip(&eb) {
            let cube = Hypercube::new(q, r, groups).unwrap();
            let p = groups.len();
            let mut logits: Vec<f64> = (0..p)
                .map(|j| a.params.logit(&cube.point(if plus { VertexMask::zeros().with(j, true) } else { VertexMask::ones(p).with(j, false) })))
                .collect();
            logits.sort_by(f64::total_cmp);
            let tied = logits.windows(2).any(|w| w[1] - w[0] < 1e-9);
            if !tied && x.1 != y.1 {
                return Err(format!("scaling by {lambda} moved the one-flip selection from {} to {}", x.1, y.1));
            }
        }
    }
    if lp.logit(r) < 0.0 {
        let (va, vb) = (sevkit::optim::volume_product(lp, r).unwrap(), sevkit::optim::volume_product(&scaled, r).unwrap());
        if lp.coef.iter().all(|c| c.abs() > 1e-6) && ((va - vb) / va).abs() > 1e-10 {
            return Err(format!("volume product {va} became {vb} under scaling by {lambda}"));
        }
    }
    Ok(())
}

/// The warm-up epochs of a run with a SEV term match a BCE-only run.
pub fn check_warmup_equivalence(rng: &mut impl Rng, family: Family) -> Check {
    use sevkit::optim::{train, SevTerm, TrainConfig};
    let p = rng.random_range(2..6);
    let space = random_space(rng, p);
    let mut data = random_dataset(rng, &space, 60);
    data.y.iter_mut().for_each(|y| *y = u8::from(rng.random_bool(0.4)));
    let reference = random_point(rng, &space);
    let kind = if family == Family::Mlp { sevkit::model::ModelKind::Mlp } else { sevkit::model::ModelKind::Linear };
    let model = Classifier::init(kind, space.encoded_width(), 8, rng.random()).map_err(|e| e.to_string())?;
    let warm = rng.random_range(1..5);
    let config = TrainConfig { warmup_epochs: warm, sev_epochs: 2, batch_size: 16, monitor_every: 0, seed: rng.random(), ..Default::default() };
    let warm_only = TrainConfig { sev_epochs: 0, ..config.clone() };
    let bce = train(model.clone(), &data, &reference, &warm_only, SevTerm::None).map_err(|e| e.to_string())?;
    for term in [SevTerm::AllOptPlus, SevTerm::AllOptMinus] {
        let degenerate = train(model.clone(), &data, &reference, &warm_only, term).map_err(|e| e.to_string())?;
        if degenerate.model != bce.model {
            return Err(format!("{term} with no SEV epochs differs from BCE-only training"));
        }
        let Ok(full) = train(model.clone(), &data, &reference, &config, term) else { continue };
        if full.history[..warm] != bce.history[..] {
            return Err(format!("{term} warm-up history differs from the BCE-only run"));
        }
    }
    Ok(())
}
