use super::config::{SevTerm, TrainConfig};
use super::losses::{allopt_minus_grad, allopt_plus_grad, allopt_restricted_grad, bce_grad, loss_bce, pos_base_grad, vol_opt_grad, Batch};
use super::OptimError;
use crate::data::Span;
use crate::model::{Classifier, Differentiable, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveValue {
    pub bce: f64,
    pub sev: f64,
    pub pos_base: f64,
    pub total: f64,
    /// Batch rows currently predicted positive.
    pub n_positive: usize,
    /// The volume term was left out because the reference scored positive.
    pub sev_skipped: bool,
}

fn sev_part(
    model: &Classifier,
    batch: &Batch,
    reference: &[f64],
    groups: &[Span],
    config: &TrainConfig,
    term: SevTerm,
) -> Result<(f64, Option<Vec<f64>>, usize, bool), OptimError> {
    if matches!(term, SevTerm::VolOpt) {
        let ModelParams::Linear(p) = &model.params else {
            return Err(OptimError::VolOptOnNonlinearModel);
        };
        return match vol_opt_grad(p, reference, config.eps, config.vol_clamp) {
            Ok((v, g)) => Ok((v, Some(g), 0, false)),
            Err(OptimError::ReferenceNotNegative) => Ok((0.0, None, 0, true)),
            Err(e) => Err(e),
        };
    }
    let positives: Vec<&[f64]> = batch.rows.iter().copied().filter(|x| model.score_unchecked(x) > config.threshold).collect();
    let n = positives.len();
    if term == SevTerm::None || n == 0 {
        return Ok((0.0, None, n, false));
    }
    let (v, g) = match term {
        SevTerm::AllOptPlus => allopt_plus_grad(model, &positives, reference, groups, config.threshold)?,
        SevTerm::AllOptMinus => allopt_minus_grad(model, &positives, reference, groups, config.threshold)?,
        SevTerm::AllOptRestricted => allopt_restricted_grad(model, &positives, reference, groups, &config.restricted, config.threshold)?,
        SevTerm::None | SevTerm::VolOpt => unreachable!(),
    };
    // the mean of terms pinned at T may round a few ulps past it
    debug_assert!(
        match term {
            SevTerm::AllOptPlus => v >= -config.threshold - 1e-12 && v <= 0.0,
            _ => v >= config.threshold - 1e-12 && v <= 1.0 + 1e-12,
        },
        "{term} loss {v} outside its bounds"
    );
    Ok((v, Some(g), n, false))
}

/// `BCE + c1 · SEV term + c2 · reference penalty` and its gradient.
pub fn objective_grad(
    model: &Classifier,
    batch: &Batch,
    reference: &[f64],
    groups: &[Span],
    config: &TrainConfig,
    term: SevTerm,
) -> Result<(ObjectiveValue, Vec<f64>), OptimError> {
    let (bce, mut grad) = bce_grad(model, batch);
    let mut out = ObjectiveValue { bce, total: bce, ..Default::default() };
    if config.c1 > 0.0 || term == SevTerm::VolOpt {
        let (v, g, n, skipped) = sev_part(model, batch, reference, groups, config, term)?;
        out.sev = v;
        out.n_positive = n;
        out.sev_skipped = skipped;
        if config.c1 > 0.0 {
            out.total += config.c1 * v;
            if let Some(g) = g {
                for (a, b) in grad.iter_mut().zip(&g) {
                    *a += config.c1 * b;
                }
            }
        }
    }
    if config.c2 > 0.0 {
        let (v, g) = pos_base_grad(model, reference, config.threshold, config.margin);
        debug_assert!(v >= config.threshold - config.margin);
        out.pos_base = v;
        out.total += config.c2 * v;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += config.c2 * b;
        }
    }
    debug_assert_eq!(grad.len(), model.params.n_params());
    Ok((out, grad))
}

pub fn total_objective(
    model: &Classifier,
    batch: &Batch,
    reference: &[f64],
    groups: &[Span],
    config: &TrainConfig,
    term: SevTerm,
) -> Result<ObjectiveValue, OptimError> {
    if config.c1 == 0.0 && config.c2 == 0.0 && term != SevTerm::VolOpt {
        let bce = loss_bce(model, batch);
        return Ok(ObjectiveValue { bce, total: bce, ..Default::default() });
    }
    Ok(objective_grad(model, batch, reference, groups, config, term)?.0)
}
