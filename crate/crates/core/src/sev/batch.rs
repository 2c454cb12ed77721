use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::{compute_sev, Hypercube, Predictor, SearchOptions, SevError, SevKind, SevResult};
use crate::data::{EncodedDataset, FeatureSpace};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchOptions {
    pub search: SearchOptions,
    pub restricted: Vec<usize>,
    /// Rows to consider; all rows when `None`.
    pub query_ids: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub index: usize,
    pub outcome: Result<SevResult, SevError>,
    pub elapsed_ns: u64,
}

impl QueryRecord {
    pub fn value(&self) -> Option<usize> {
        self.outcome.as_ref().ok().and_then(|r| r.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SevStats {
    pub kind: SevKind,
    pub n_rows: usize,
    /// Rows predicted negative and therefore not explained.
    pub n_skipped: usize,
    pub features_used: usize,
    pub records: Vec<QueryRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SevSummary {
    pub n_queries: usize,
    pub n_errors: usize,
    pub n_unexplained: usize,
    pub pct_unexplained: f64,
    pub mean: f64,
    pub histogram: BTreeMap<usize, usize>,
}

impl SevStats {
    pub fn n_queries(&self) -> usize {
        self.records.len()
    }

    /// Value used in means: the SEV, or the model's feature count when
    /// unexplained. `None` for failed queries.
    pub fn effective_value(&self, rec: &QueryRecord) -> Option<usize> {
        rec.outcome.as_ref().ok().map(|r| r.value.unwrap_or(self.features_used))
    }

    pub fn summary(&self) -> SevSummary {
        let ok: Vec<&SevResult> = self.records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let n_unexplained = ok.iter().filter(|r| r.value.is_none()).count();
        let mut histogram = BTreeMap::new();
        for r in &ok {
            if let Some(v) = r.value {
                *histogram.entry(v).or_insert(0) += 1;
            }
        }
        let total: usize = ok.iter().map(|r| r.value.unwrap_or(self.features_used)).sum();
        let (mean, pct) = if ok.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (total as f64 / ok.len() as f64, 100.0 * n_unexplained as f64 / ok.len() as f64)
        };
        SevSummary { n_queries: ok.len(), n_errors: self.records.len() - ok.len(), n_unexplained, pct_unexplained: pct, mean, histogram }
    }

    /// Per-query runtime percentile in microseconds (`q` in [0, 1]).
    pub fn runtime_percentile_us(&self, q: f64) -> f64 {
        let mut t: Vec<u64> = self.records.iter().map(|r| r.elapsed_ns).collect();
        if t.is_empty() {
            return f64::NAN;
        }
        t.sort_unstable();
        let pos = q.clamp(0.0, 1.0) * (t.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        let v = t[lo] as f64 + (t[hi] as f64 - t[lo] as f64) * (pos - lo as f64);
        v / 1e3
    }
}

/// Explains every positively predicted row. Rows are evaluated in parallel
/// and returned in row order.
pub fn batch_sev<M: Predictor>(model: &M, data: &EncodedDataset, reference: &[f64], kind: SevKind, opts: &BatchOptions) -> Result<SevStats, SevError> {
    let groups = &data.space.groups;
    if model.input_dim() != data.n_cols() {
        return Err(SevError::DimensionMismatch { expected: model.input_dim(), found: data.n_cols() });
    }
    if reference.len() != data.n_cols() {
        return Err(SevError::DimensionMismatch { expected: data.n_cols(), found: reference.len() });
    }
    if model.predict(reference) {
        return Err(SevError::ReferenceNotNegative);
    }
    let ids: Vec<usize> = match &opts.query_ids {
        Some(ids) => {
            if let Some(&bad) = ids.iter().find(|&&i| i >= data.len()) {
                return Err(SevError::DimensionMismatch { expected: data.len(), found: bad });
            }
            ids.clone()
        }
        None => (0..data.len()).collect(),
    };
    let positives: Vec<usize> = ids.iter().copied().filter(|&i| model.predict(data.row(i))).collect();
    let records = positives
        .par_iter()
        .map(|&i| {
            let start = Instant::now();
            let outcome = Hypercube::new(data.row(i), reference, groups).and_then(|cube| compute_sev(model, &cube, kind, &opts.restricted, &opts.search));
            QueryRecord { index: i, outcome, elapsed_ns: start.elapsed().as_nanos() as u64 }
        })
        .collect();
    Ok(SevStats { kind, n_rows: ids.len(), n_skipped: ids.len() - positives.len(), features_used: model.features_used(groups), records })
}

/// Counts of (value under `a`, value under `b`) over queries explained by
/// both runs; `None` marks unexplained.
pub fn transition_counts(a: &SevStats, b: &SevStats) -> BTreeMap<(Option<usize>, Option<usize>), usize> {
    let by_index: BTreeMap<usize, &QueryRecord> = b.records.iter().map(|r| (r.index, r)).collect();
    let mut out = BTreeMap::new();
    for ra in &a.records {
        let (Ok(x), Some(Ok(y))) = (&ra.outcome, by_index.get(&ra.index).map(|r| &r.outcome)) else {
            continue;
        };
        *out.entry((x.value, y.value)).or_insert(0) += 1;
    }
    out
}

/// One JSON object per query: value, explanations with decoded changes.
pub fn record_json(rec: &QueryRecord, space: &FeatureSpace, query: &[f64], reference: &[f64]) -> Value {
    match &rec.outcome {
        Err(e) => json!({ "query_id": rec.index, "error": e.to_string() }),
        Ok(r) => {
            let (from, to) = match r.kind {
                SevKind::Plus => (reference, query),
                _ => (query, reference),
            };
            let explanations: Vec<Value> = r
                .explanations
                .iter()
                .map(|e| {
                    let changes: Vec<Value> = e
                        .changed
                        .iter()
                        .map(|&j| {
                            json!({
                                "feature": space.schema.features[j].name,
                                "from": space.display_value(j, from),
                                "to": space.display_value(j, to),
                            })
                        })
                        .collect();
                    let mask: String = (0..space.n_features()).map(|j| if e.mask.get(j) { '1' } else { '0' }).collect();
                    json!({ "mask": mask, "changes": changes })
                })
                .collect();
            json!({
                "query_id": rec.index,
                "kind": r.kind,
                "value": r.value,
                "unexplained": r.value.is_none(),
                "depth_limit_hit": r.depth_limit_hit,
                "expanded": r.expanded,
                "explanations": explanations,
            })
        }
    }
}
