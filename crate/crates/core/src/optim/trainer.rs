use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{SevTerm, TrainConfig};
use super::losses::{bce_grad, Batch};
use super::metrics::accuracy;
use super::objective::{objective_grad, ObjectiveValue};
use super::{OptimError, Optimizer};
use crate::data::EncodedDataset;
use crate::model::{Classifier, Differentiable};
use crate::sev::{compute_sev, Hypercube, SearchOptions, SevKind};

/// Stream id for the monitoring subsample, kept apart from batch shuffling.
const MONITOR_STREAM: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub phase: &'static str,
    pub bce: f64,
    pub sev: f64,
    pub pos_base: f64,
    pub total: f64,
    pub accuracy: f64,
    pub monitored_sev: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Classifier,
    pub history: Vec<EpochRecord>,
    /// `g(x̃) < T` after training.
    pub reference_negative: bool,
    /// Batches where the volume term was dropped because `g(x̃) ≥ T`.
    pub vol_skipped_batches: usize,
}

impl TrainOutcome {
    /// The reference penalty was active but the reference still scores positive.
    pub fn reference_check_failed(&self, config: &TrainConfig) -> bool {
        config.c2 > 0.0 && config.sev_epochs > 0 && !self.reference_negative
    }
}

/// Mean SEV (unexplained counted as the model's feature count) over a fixed
/// subsample of positively predicted rows.
fn monitor_sev(model: &Classifier, data: &EncodedDataset, reference: &[f64], ids: &[usize], kind: SevKind, config: &TrainConfig) -> Option<f64> {
    if model.predict_unchecked(reference) {
        return None;
    }
    let groups = &data.space.groups;
    let opts = SearchOptions { depth_limit: config.monitor_depth, max_explanations: 1 };
    let fallback = model.features_used(groups);
    let values: Vec<usize> = ids
        .iter()
        .filter(|&&i| model.predict_unchecked(data.row(i)))
        .filter_map(|&i| {
            let cube = Hypercube::new(data.row(i), reference, groups).ok()?;
            compute_sev(model, &cube, kind, &config.restricted, &opts).ok().map(|r| r.value.unwrap_or(fallback))
        })
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<usize>() as f64 / values.len() as f64)
}

/// Warm-up epochs on BCE alone, then epochs on the full objective.
pub fn train(mut model: Classifier, data: &EncodedDataset, reference: &[f64], config: &TrainConfig, term: SevTerm) -> Result<TrainOutcome, OptimError> {
    config.validate()?;
    if model.input_dim() != data.n_cols() || reference.len() != data.n_cols() {
        return Err(OptimError::InvalidConfig(format!("model expects {} columns, data has {}", model.input_dim(), data.n_cols())));
    }
    if term == SevTerm::VolOpt && !matches!(model.params, crate::model::ModelParams::Linear(_)) {
        return Err(OptimError::VolOptOnNonlinearModel);
    }
    if data.is_empty() {
        return Err(OptimError::InvalidConfig("empty training data".into()));
    }
    model.threshold = config.threshold;
    let groups = &data.space.groups;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut monitor_rng = ChaCha8Rng::seed_from_u64(config.seed);
    monitor_rng.set_stream(MONITOR_STREAM);
    let mut monitor_ids = index::sample(&mut monitor_rng, data.len(), config.monitor_queries.min(data.len())).into_vec();
    monitor_ids.sort_unstable();
    let kind = term.sev_kind();

    let mut theta = model.params.params();
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, theta.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs());
    let mut vol_skipped_batches = 0;
    for epoch in 0..config.epochs() {
        let warm = epoch < config.warmup_epochs;
        order.shuffle(&mut rng);
        let mut sums = ObjectiveValue::default();
        let mut n_batches = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch = Batch { rows: chunk.iter().map(|&i| data.row(i)).collect(), labels: chunk.iter().map(|&i| data.y[i]).collect() };
            let (v, grad) = if warm {
                let (bce, g) = bce_grad(&model, &batch);
                (ObjectiveValue { bce, total: bce, ..Default::default() }, g)
            } else {
                objective_grad(&model, &batch, reference, groups, config, term)?
            };
            if !v.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(OptimError::NonFiniteLoss { epoch });
            }
            vol_skipped_batches += usize::from(v.sev_skipped);
            sums.bce += v.bce;
            sums.sev += v.sev;
            sums.pos_base += v.pos_base;
            sums.total += v.total;
            n_batches += 1;
            opt.step(&mut theta, &grad);
            model.params.set_params(&theta);
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(OptimError::NonFiniteLoss { epoch });
        }
        let nb = n_batches as f64;
        let monitored = (config.monitor_every > 0 && (epoch + 1) % config.monitor_every == 0)
            .then(|| monitor_sev(&model, data, reference, &monitor_ids, kind, config))
            .flatten();
        history.push(EpochRecord {
            epoch,
            phase: if warm { "warmup" } else { "sev" },
            bce: sums.bce / nb,
            sev: sums.sev / nb,
            pos_base: sums.pos_base / nb,
            total: sums.total / nb,
            accuracy: accuracy(&model, data),
            monitored_sev: monitored,
        });
        log::debug!("epoch {epoch}: total {:.4} acc {:.4}", sums.total / nb, history.last().unwrap().accuracy);
    }
    let reference_negative = model.score_unchecked(reference) < config.threshold;
    if config.c2 > 0.0 && config.sev_epochs > 0 && !reference_negative {
        log::warn!("reference still scores {:.4} >= threshold after training", model.score_unchecked(reference));
    }
    Ok(TrainOutcome { model, history, reference_negative, vol_skipped_batches })
}

/// History as CSV, full precision.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,phase,bce,sev,pos_base,total,accuracy,monitored_sev\n");
    for r in history {
        let m = r.monitored_sev.map_or(String::new(), |v| v.to_string());
        out.push_str(&format!("{},{},{},{},{},{},{},{}\n", r.epoch, r.phase, r.bce, r.sev, r.pos_base, r.total, r.accuracy, m));
    }
    out
}
