//! Seeded synthetic tabular data for tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};

use crate::data::{encode, EncodedDataset, FeatureSchema, FeatureSpace, FeatureSpec, RawDataset, RawValue};

/// Two Gaussian blobs split by a hyperplane with a gap.
///
/// Points are drawn from N(0, I). A unit direction `w` is drawn once per
/// seed; each point's component along `w` is replaced by
/// `±(|s| + margin/2)`, the sign set by its label. The classes are then
/// linearly separable with a gap of width `margin` around `wᵀx = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub n: usize,
    pub p: usize,
    pub margin: f64,
    pub positive_fraction: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self { n: 4000, p: 10, margin: 1.0, positive_fraction: 0.5 }
    }
}

fn shuffled_labels(n: usize, positive_fraction: f64, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let n_pos = ((n as f64) * positive_fraction).round() as usize;
    let mut y: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    y.shuffle(rng);
    y
}

fn unit_direction(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.into_iter().map(|v| v / norm).collect()
}

pub fn blobs_raw(spec: &BlobSpec, seed: u64) -> (FeatureSchema, RawDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = unit_direction(&mut rng, spec.p);
    let labels = shuffled_labels(spec.n, spec.positive_fraction, &mut rng);
    let rows = labels
        .iter()
        .map(|&y| {
            let mut x: Vec<f64> = (0..spec.p).map(|_| rng.sample(StandardNormal)).collect();
            let s: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            let side = if y == 1 { 1.0 } else { -1.0 };
            let target = side * (s.abs() + spec.margin / 2.0);
            for (v, wj) in x.iter_mut().zip(&w) {
                *v += (target - s) * wj;
            }
            x.into_iter().map(RawValue::Num).collect()
        })
        .collect();
    let features = (0..spec.p).map(|j| FeatureSpec::numeric(format!("x{j}"))).collect();
    let schema = FeatureSchema::new("label", "1", features).expect("blob schema");
    (schema, RawDataset { rows, labels })
}

/// Blobs with identity standardization (no fitting).
pub fn gaussian_blobs(spec: &BlobSpec, seed: u64) -> EncodedDataset {
    let (schema, raw) = blobs_raw(spec, seed);
    let space = FeatureSpace::with_identity_stats(schema);
    let rows = raw.rows.iter().map(|r| r.iter().map(|v| v.as_num().unwrap()).collect()).collect();
    EncodedDataset::from_rows(space, rows, raw.labels)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> f64 {
    Poisson::new(lambda).expect("positive rate").sample(rng)
}

/// Recidivism-style data. A latent risk drives prior counts, juvenile
/// counts, charge degree and, more weakly, youth and sex; the label depends
/// on the latent risk plus direct age and sex effects. `sex` and `age` are
/// flagged as restricted in the schema.
pub fn compas_like_raw(n: usize, seed: u64) -> (FeatureSchema, RawDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let r: f64 = noise.sample(&mut rng);
        let age = (34.0 - 5.0 * r + 10.0 * noise.sample(&mut rng)).clamp(18.0, 75.0).round();
        let male = bernoulli(&mut rng, sigmoid(1.45 + 0.5 * r));
        let priors = poisson(&mut rng, (0.6 + r).exp());
        let juv_fel = poisson(&mut rng, (-2.8 + 0.8 * r).exp());
        let juv_misd = poisson(&mut rng, (-2.6 + 0.8 * r).exp());
        let juv_other = poisson(&mut rng, (-2.3 + 0.6 * r).exp());
        let felony = bernoulli(&mut rng, sigmoid(0.6 + 0.3 * r));
        let z = -1.0 + 1.5 * r - 0.03 * (age - 34.0) + 0.3 * f64::from(u8::from(male));
        labels.push(u8::from(bernoulli(&mut rng, sigmoid(z))));
        rows.push(vec![
            RawValue::Level(usize::from(male)),
            RawValue::Num(age),
            RawValue::Num(priors),
            RawValue::Num(juv_fel),
            RawValue::Num(juv_misd),
            RawValue::Num(juv_other),
            RawValue::Level(usize::from(felony)),
        ]);
    }
    let schema = FeatureSchema::new(
        "two_year_recid",
        "1",
        vec![
            FeatureSpec::binary("sex", "Female", "Male").restricted(),
            FeatureSpec::numeric("age").restricted(),
            FeatureSpec::numeric("priors_count"),
            FeatureSpec::numeric("juv_fel_count"),
            FeatureSpec::numeric("juv_misd_count"),
            FeatureSpec::numeric("juv_other_count"),
            FeatureSpec::binary("c_charge_degree", "M", "F"),
        ],
    )
    .expect("compas schema");
    (schema, RawDataset { rows, labels })
}

fn pick(rng: &mut ChaCha8Rng, logits: &[f64]) -> usize {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
    for (k, wk) in w.iter().enumerate() {
        u -= wk;
        if u < 0.0 {
            return k;
        }
    }
    w.len() - 1
}

/// Census-income-style data with several categorical groups, some of
/// them irrelevant to the label.
pub fn adult_like_raw(n: usize, seed: u64) -> (FeatureSchema, RawDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let s: f64 = noise.sample(&mut rng);
        let age = (38.0 + 12.0 * noise.sample(&mut rng)).clamp(17.0, 90.0).round();
        let edu = (10.0 + 2.5 * noise.sample(&mut rng) + 0.8 * s).clamp(1.0, 16.0).round();
        let hours = (40.0 + 10.0 * noise.sample(&mut rng) + 3.0 * s).clamp(1.0, 99.0).round();
        let gain = if bernoulli(&mut rng, 0.06 + 0.08 * f64::from(u8::from(s > 1.0))) {
            (8.0 + noise.sample(&mut rng)).exp().round()
        } else {
            0.0
        };
        let workclass = pick(&mut rng, &[1.5, 0.0, 0.2, -0.5]);
        let a = (age - 38.0) / 12.0;
        let marital = pick(&mut rng, &[0.6 + 0.6 * a, -1.2 * a, -0.6 + 0.3 * a, -2.0 + 1.0 * a]);
        let occupation = pick(&mut rng, &[0.8 * s, 0.6 * s, 0.1 * s, 0.0, -0.3 * s, -0.5 * s]);
        let male = bernoulli(&mut rng, 0.67);
        let relationship = match (marital, male) {
            (0, true) => 0,
            (0, false) => 1,
            _ if age < 25.0 && bernoulli(&mut rng, 0.6) => 2,
            _ => 3,
        };
        let race = pick(&mut rng, &[2.0, 0.0, -0.5]);
        let us = bernoulli(&mut rng, 0.9);
        let married = f64::from(u8::from(marital == 0));
        let z = -2.2 + 1.0 * s + 0.025 * (age - 38.0) + 1.4 * married + 0.35 * (edu - 10.0) + 1.2 * f64::from(u8::from(gain > 0.0))
            + 0.03 * (hours - 40.0);
        labels.push(u8::from(bernoulli(&mut rng, sigmoid(z))));
        rows.push(vec![
            RawValue::Num(age),
            RawValue::Num(edu),
            RawValue::Num(hours),
            RawValue::Num(gain),
            RawValue::Level(workclass),
            RawValue::Level(marital),
            RawValue::Level(occupation),
            RawValue::Level(relationship),
            RawValue::Level(race),
            RawValue::Level(usize::from(male)),
            RawValue::Level(usize::from(us)),
        ]);
    }
    let schema = FeatureSchema::new(
        "income",
        ">50K",
        vec![
            FeatureSpec::numeric("age"),
            FeatureSpec::numeric("education_num"),
            FeatureSpec::numeric("hours_per_week"),
            FeatureSpec::numeric("capital_gain"),
            FeatureSpec::categorical("workclass", ["Private", "Self-emp", "Gov", "Other"]),
            FeatureSpec::categorical("marital_status", ["Married", "Never-married", "Divorced", "Widowed"]),
            FeatureSpec::categorical("occupation", ["Exec-managerial", "Prof-specialty", "Sales", "Craft-repair", "Other-service", "Handlers-cleaners"]),
            FeatureSpec::categorical("relationship", ["Husband", "Wife", "Own-child", "Not-in-family"]),
            FeatureSpec::categorical("race", ["White", "Black", "Other"]),
            FeatureSpec::binary("sex", "Female", "Male"),
            FeatureSpec::binary("native_us", "No", "Yes"),
        ],
    )
    .expect("adult schema");
    (schema, RawDataset { rows, labels })
}

/// Adult-like rows encoded with standardization fitted on themselves.
pub fn adult_like(n: usize, seed: u64) -> (EncodedDataset, RawDataset) {
    let (schema, raw) = adult_like_raw(n, seed);
    let enc = encode(&raw, &schema, None).expect("adult encoding");
    (enc, raw)
}

/// Raw rows as CSV text with the schema's column names and label.
pub fn to_csv(schema: &FeatureSchema, raw: &RawDataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&schema.label);
    w.write_record(&header).expect("write header");
    for (row, &y) in raw.rows.iter().zip(&raw.labels) {
        let mut rec: Vec<String> = row
            .iter()
            .zip(&schema.features)
            .map(|(v, f)| match v {
                RawValue::Num(x) => x.to_string(),
                RawValue::Level(l) => f.kind.levels().expect("levels")[*l].clone(),
            })
            .collect();
        rec.push(if y == 1 { schema.positive_label.clone() } else { format!("not {}", schema.positive_label) });
        w.write_record(&rec).expect("write row");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
