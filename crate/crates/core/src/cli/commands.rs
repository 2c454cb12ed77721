use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use super::manifest::{sha256_hex, OutDir, RunManifest, MANIFEST_FILE};
use super::report::{sig4, stats_csv, summary_line};
use super::{CliError, CompareArgs, Common, ExplainArgs, PrepareArgs, StatsArgs, TrainArgs, VolcheckArgs};
use crate::data::persist::{encoded_to_csv, read_encoded, reference_from_json, reference_to_json, space_from_json, space_to_json};
use crate::data::{load_csv, prepare_fixed, EncodedDataset, FeatureSchema, FeatureSpace, Reference};
use crate::model::{deserialize, fit_baseline, fit_gbdt, serialize, BaselineConfig, Classifier, GbdtConfig, LinearFitConfig, LinearParams, MlpFitConfig, ModelKind, ModelParams};
use crate::optim::{evaluate, history_csv, mc_volume_check, SampleBox, SevTerm, TrainConfig, VolClamp};
use crate::sev::{batch_sev, flip_count, record_json, sev_minus, BatchOptions, Hypercube, SearchOptions, SevError, SevKind, SevSummary};

pub const SPACE_FILE: &str = "space.json";
pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const REFERENCE_FILE: &str = "reference.json";

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn require_out<'a>(common: &'a Common, cmd: &str) -> Result<&'a Path, CliError> {
    common.out.as_deref().ok_or_else(|| CliError::Usage(format!("`{cmd}` needs --out <dir>")))
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("report serializes");
    out.push(b'\n');
    out
}

fn resolve_features(schema: &FeatureSchema, names: &str) -> Result<Vec<usize>, CliError> {
    names
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|n| {
            schema.index_of(n).ok_or_else(|| {
                CliError::Usage(format!("unknown feature `{n}` (features: {})", schema.features.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(", ")))
            })
        })
        .collect()
}

fn parse_ids(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::Usage(format!("`{t}` is not a row index"))))
        .collect()
}

fn load_model(path: &Path) -> Result<Classifier, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    deserialize(&bytes).map_err(|e| io_err(path, e))
}

/// A directory written by `prepare`.
#[derive(Debug, Clone)]
pub struct PreparedDir {
    pub dir: PathBuf,
    pub space: FeatureSpace,
    /// sha256 of `space.json`; models record it to catch mismatched data.
    pub space_digest: String,
    pub train: EncodedDataset,
    pub test: EncodedDataset,
    pub reference: Reference,
}

impl PreparedDir {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::Input(format!("{}: not a prepared data directory", dir.display())));
        }
        if dir.join(MANIFEST_FILE).exists() {
            let stale = RunManifest::load(dir)?.stale_outputs(dir);
            if !stale.is_empty() {
                return Err(CliError::Input(format!("{}: files changed since they were written: {}", dir.display(), stale.join(", "))));
            }
        }
        let space_path = dir.join(SPACE_FILE);
        let space_text = std::fs::read_to_string(&space_path).map_err(|e| io_err(&space_path, e))?;
        let space = space_from_json(&space_text)?;
        let train = read_encoded(&dir.join(TRAIN_FILE), &space)?;
        let test = read_encoded(&dir.join(TEST_FILE), &space)?;
        let ref_path = dir.join(REFERENCE_FILE);
        let reference = reference_from_json(&std::fs::read_to_string(&ref_path).map_err(|e| io_err(&ref_path, e))?)?;
        if reference.len() != space.encoded_width() {
            return Err(CliError::Input(format!("{}: reference has {} columns, feature space {}", ref_path.display(), reference.len(), space.encoded_width())));
        }
        Ok(Self { dir: dir.to_path_buf(), space, space_digest: sha256_hex(space_text.as_bytes()), train, test, reference })
    }

    pub fn split(&self, name: &str) -> &EncodedDataset {
        if name == "train" {
            &self.train
        } else {
            &self.test
        }
    }

    fn record_inputs(&self, out: &mut OutDir, splits: &[&str]) -> Result<(), CliError> {
        out.input(&self.dir.join(SPACE_FILE))?;
        out.input(&self.dir.join(REFERENCE_FILE))?;
        for s in splits {
            out.input(&self.dir.join(if *s == "train" { TRAIN_FILE } else { TEST_FILE }))?;
        }
        Ok(())
    }

    /// Fails before any computation when the model was built for other data.
    pub fn check_model(&self, model: &Classifier) -> Result<(), CliError> {
        if model.input_dim() != self.space.encoded_width() {
            return Err(CliError::Input(format!(
                "model expects {} encoded columns, {} has {}",
                model.input_dim(),
                self.dir.display(),
                self.space.encoded_width()
            )));
        }
        if let Some(d) = &model.space_digest {
            if *d != self.space_digest {
                return Err(CliError::Input(format!(
                    "model was trained on a different feature space (digest {} vs {} in {})",
                    &d[..d.len().min(12)],
                    &self.space_digest[..12],
                    self.dir.display()
                )));
            }
        }
        Ok(())
    }
}

pub fn prepare(a: &PrepareArgs) -> Result<(), CliError> {
    let out_dir = require_out(&a.common, "prepare")?;
    let schema = FeatureSchema::load(&a.schema)?;
    let raw = load_csv(&a.csv, &schema)?;
    let seed = a.common.seed.unwrap_or(0);
    let prepared = match &a.test_csv {
        Some(test_csv) => prepare_fixed(&raw, &load_csv(test_csv, &schema)?, &schema)?,
        None => {
            if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
                return Err(CliError::Usage(format!("--test-fraction must be in (0, 1), got {}", a.test_fraction)));
            }
            crate::data::prepare(&raw, &schema, a.test_fraction, seed)?
        }
    };
    let config = json!({ "test_fraction": a.test_csv.is_none().then_some(a.test_fraction), "schema": schema });
    let mut out = OutDir::create(out_dir, "prepare", Some(seed), &config)?;
    out.input(&a.csv)?;
    out.input(&a.schema)?;
    if let Some(t) = &a.test_csv {
        out.input(t)?;
    }
    let space = &prepared.train.space;
    out.write(TRAIN_FILE, encoded_to_csv(&prepared.train).as_bytes())?;
    out.write(TEST_FILE, encoded_to_csv(&prepared.test).as_bytes())?;
    out.write(SPACE_FILE, space_to_json(space).as_bytes())?;
    out.write(REFERENCE_FILE, reference_to_json(&prepared.reference, space).as_bytes())?;
    out.finish()?;
    let pos = |d: &EncodedDataset| d.y.iter().filter(|&&y| y == 1).count();
    println!(
        "train {} rows ({} positive)  test {} rows ({} positive)  {} features  {} encoded columns",
        prepared.train.len(),
        pos(&prepared.train),
        prepared.test.len(),
        pos(&prepared.test),
        space.n_features(),
        space.encoded_width()
    );
    for w in prepared.train.warnings.iter().chain(&prepared.test.warnings) {
        log::warn!("{w}");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ModelReport {
    split: &'static str,
    accuracy: f64,
    auc: Option<f64>,
    sev_kind: SevKind,
    mean_sev: Option<f64>,
    pct_unexplained: Option<f64>,
    n_queries: usize,
    reference_negative: bool,
    zero_coef_fraction: Option<f64>,
}

fn model_report(model: &Classifier, prep: &PreparedDir, kind: SevKind, restricted: &[usize]) -> ModelReport {
    let data = &prep.test;
    let (accuracy, auc) = match evaluate(model, data) {
        Ok(m) => (m.accuracy, Some(m.auc)),
        Err(_) => (crate::optim::accuracy(model, data), None),
    };
    let opts = BatchOptions { restricted: restricted.to_vec(), ..Default::default() };
    let summary = batch_sev(model, data, &prep.reference.values, kind, &opts).ok().map(|s| s.summary());
    ModelReport {
        split: "test",
        accuracy,
        auc,
        sev_kind: kind,
        mean_sev: summary.as_ref().map(|s| s.mean).filter(|m| m.is_finite()),
        pct_unexplained: summary.as_ref().map(|s| s.pct_unexplained).filter(|m| m.is_finite()),
        n_queries: summary.as_ref().map_or(0, |s| s.n_queries),
        reference_negative: !model.predict_unchecked(&prep.reference.values),
        zero_coef_fraction: match &model.params {
            ModelParams::Linear(p) => Some(p.zero_fraction()),
            _ => None,
        },
    }
}

fn kind_mark(kind: SevKind) -> &'static str {
    match kind {
        SevKind::Plus => "+",
        SevKind::Minus => "-",
        SevKind::Restricted => "(r)",
    }
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let out_dir = require_out(&a.common, "train")?;
    let prep = PreparedDir::load(&a.data)?;
    let mut config: TrainConfig = read_config(a.common.config.as_deref())?;
    if let Some(s) = a.common.seed {
        config.seed = s;
    }
    if a.paper_literal_clamp {
        config.vol_clamp = VolClamp::PaperLiteral;
    }
    let schema = &prep.space.schema;
    if let Some(names) = &a.restricted {
        config.restricted = resolve_features(schema, names)?;
    } else if a.sev == SevTerm::AllOptRestricted && config.restricted.is_empty() {
        config.restricted = schema.restricted_set();
    }
    config.validate()?;
    if a.sev == SevTerm::VolOpt && a.model != ModelKind::Linear {
        return Err(crate::optim::OptimError::VolOptOnNonlinearModel.into());
    }
    if a.baseline && a.sev != SevTerm::None {
        return Err(CliError::Usage("--baseline fits the conventional model and takes no --sev term".into()));
    }
    let effective = json!({
        "model": a.model, "sev": a.sev, "baseline": a.baseline, "penalty": a.penalty,
        "c": a.c, "hidden": a.hidden, "train": config,
    });
    let mut out = OutDir::create(out_dir, "train", Some(config.seed), &effective)?;
    prep.record_inputs(&mut out, &["train", "test"])?;

    let mut history = None;
    let mut reference_failed = false;
    let mut model = if a.baseline {
        let lambda = LinearFitConfig::lambda_from_c(a.c, prep.train.len());
        let bc = match a.model {
            ModelKind::Linear => BaselineConfig::Linear(LinearFitConfig {
                l1: if a.penalty == "l1" { lambda } else { 0.0 },
                l2: if a.penalty == "l2" { lambda } else { 0.0 },
                seed: config.seed,
                threshold: config.threshold,
                ..Default::default()
            }),
            ModelKind::Mlp => BaselineConfig::Mlp(MlpFitConfig { hidden: a.hidden, seed: config.seed, threshold: config.threshold, ..Default::default() }),
            ModelKind::Gbdt => BaselineConfig::Gbdt { config: GbdtConfig::default(), threshold: config.threshold },
        };
        fit_baseline(&prep.train, &bc)?
    } else {
        let init = match a.model {
            ModelKind::Gbdt => fit_gbdt(&prep.train, &GbdtConfig::default(), config.threshold)?,
            k => Classifier::init(k, prep.train.n_cols(), a.hidden, config.seed)?,
        };
        let outcome = crate::optim::train(init, &prep.train, &prep.reference.values, &config, a.sev)?;
        reference_failed = outcome.reference_check_failed(&config);
        if outcome.vol_skipped_batches > 0 {
            log::warn!("volume term skipped on {} batches while the reference scored positive", outcome.vol_skipped_batches);
        }
        history = Some(outcome.history);
        outcome.model
    };
    model.space_digest = Some(prep.space_digest.clone());
    let kind = a.sev.sev_kind();
    let report = model_report(&model, &prep, kind, &config.restricted);
    out.write("model.json", &serialize(&model))?;
    if let Some(h) = &history {
        out.write("history.csv", history_csv(h).as_bytes())?;
    }
    out.write("metrics.json", &pretty(&report))?;
    out.finish()?;
    let sev = match report.mean_sev {
        Some(m) => format!("mean SEV{} {}  unexplained {}%", kind_mark(kind), sig4(m), sig4(report.pct_unexplained.unwrap_or(f64::NAN))),
        None if !report.reference_negative => format!("mean SEV{} n/a (reference predicted positive)", kind_mark(kind)),
        None => format!("mean SEV{} n/a (no positive test predictions)", kind_mark(kind)),
    };
    println!("accuracy {}  auc {}  {sev}", sig4(report.accuracy), report.auc.map_or("n/a".into(), sig4));
    if reference_failed {
        return Err(CliError::Compute("the reference still scores at or above the threshold after training".into()));
    }
    Ok(())
}

pub fn explain(a: &ExplainArgs) -> Result<(), CliError> {
    let out_dir = require_out(&a.common, "explain")?;
    let model = load_model(&a.model)?;
    let prep = PreparedDir::load(&a.data)?;
    prep.check_model(&model)?;
    let mut search: SearchOptions = read_config(a.common.config.as_deref())?;
    if let Some(d) = a.depth_limit {
        search.depth_limit = d;
    }
    if let Some(m) = a.max_explanations {
        search.max_explanations = m;
    }
    let schema = &prep.space.schema;
    let restricted = match (&a.restricted, a.kind) {
        (Some(names), SevKind::Restricted) => resolve_features(schema, names)?,
        (None, SevKind::Restricted) => schema.restricted_set(),
        (Some(_), _) => return Err(CliError::Usage("--restricted applies to --kind restricted only".into())),
        (None, _) => Vec::new(),
    };
    let query_ids = a.query_ids.as_deref().map(parse_ids).transpose()?;
    let data = prep.split(&a.split);
    if let Some(&bad) = query_ids.iter().flatten().find(|&&i| i >= data.len()) {
        return Err(CliError::Usage(format!("query id {bad} is out of range for {} rows", data.len())));
    }
    let config = json!({ "kind": a.kind, "search": search, "restricted": restricted, "query_ids": query_ids, "split": a.split });
    let mut out = OutDir::create(out_dir, "explain", a.common.seed, &config)?;
    out.input(&a.model)?;
    prep.record_inputs(&mut out, &[a.split.as_str()])?;

    let reference = &prep.reference.values;
    let stats = batch_sev(&model, data, reference, a.kind, &BatchOptions { search, restricted, query_ids })?;
    let mut jsonl = String::new();
    for rec in &stats.records {
        let mut v = record_json(rec, &prep.space, data.row(rec.index), reference);
        if let Value::Object(m) = &mut v {
            if !m.contains_key("error") {
                m.insert("effective_value".into(), json!(stats.effective_value(rec)));
            }
        }
        jsonl.push_str(&v.to_string());
        jsonl.push('\n');
    }
    let summary = stats.summary();
    out.write("explanations.jsonl", jsonl.as_bytes())?;
    out.write("stats.csv", stats_csv(&summary, Some(&stats), stats.features_used).as_bytes())?;
    out.finish()?;
    println!(
        "{}  skipped {} negative  median {} us/query",
        summary_line(kind_mark(a.kind), &summary),
        stats.n_skipped,
        sig4(stats.runtime_percentile_us(0.5))
    );
    Ok(())
}

/// Feature orderings by ascending rank; ties keep schema order.
fn read_importance(path: &Path, schema: &FeatureSchema) -> Result<(Option<BTreeMap<usize, Vec<usize>>>, Vec<usize>), CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = rdr.headers().map_err(|e| io_err(path, e))?.iter().map(|s| s.trim().to_string()).collect();
    let per_query = header.first().map(String::as_str) == Some("query_id");
    let cols = &header[usize::from(per_query)..];
    if let Some(c) = cols.iter().find(|c| schema.index_of(c).is_none()) {
        return Err(CliError::Input(format!("{}: `{c}` is not a feature of the model's schema", path.display())));
    }
    let mut col_of = Vec::with_capacity(schema.len());
    for f in &schema.features {
        let k = cols.iter().position(|c| *c == f.name).ok_or_else(|| CliError::Input(format!("{}: no rank given for feature `{}`", path.display(), f.name)))?;
        col_of.push(k + usize::from(per_query));
    }
    let mut by_query = BTreeMap::new();
    let mut global = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let cell = |k: usize| -> Result<f64, CliError> {
            rec.get(k).unwrap_or("").trim().parse::<f64>().map_err(|_| CliError::Input(format!("{}: row {}: `{}` is not a rank", path.display(), i + 1, rec.get(k).unwrap_or(""))))
        };
        let ranks: Vec<f64> = col_of.iter().map(|&k| cell(k)).collect::<Result<_, _>>()?;
        let mut order: Vec<usize> = (0..ranks.len()).collect();
        order.sort_by(|&x, &y| ranks[x].total_cmp(&ranks[y]).then(x.cmp(&y)));
        if per_query {
            let q = cell(0)?;
            if q < 0.0 || q.fract() != 0.0 {
                return Err(CliError::Input(format!("{}: row {}: bad query_id", path.display(), i + 1)));
            }
            by_query.insert(q as usize, order);
        } else if global.replace(order).is_some() {
            return Err(CliError::Input(format!("{}: a global ordering has exactly one row; add a query_id column for per-query orderings", path.display())));
        }
    }
    match (per_query, global) {
        (true, _) => Ok((Some(by_query), Vec::new())),
        (false, Some(g)) => Ok((None, g)),
        (false, None) => Err(CliError::Input(format!("{}: no ordering rows", path.display()))),
    }
}

#[derive(Debug, Serialize)]
struct CompareSummary {
    n_queries: usize,
    mean_flip_count: Option<f64>,
    mean_sev_minus: Option<f64>,
    n_flip_equals_sev: usize,
    flip_histogram: BTreeMap<usize, usize>,
    sev_minus_histogram: BTreeMap<usize, usize>,
}

fn mean(v: &[usize]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<usize>() as f64 / v.len() as f64)
}

fn histogram(v: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &x in v {
        *h.entry(x).or_insert(0) += 1;
    }
    h
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let out_dir = require_out(&a.common, "compare")?;
    let model = load_model(&a.model)?;
    let prep = PreparedDir::load(&a.data)?;
    prep.check_model(&model)?;
    let (per_query, global) = read_importance(&a.importance, &prep.space.schema)?;
    let data = prep.split(&a.split);
    let reference = &prep.reference.values;
    if model.predict_unchecked(reference) {
        return Err(SevError::ReferenceNotNegative.into());
    }
    let queries: Vec<(usize, &[usize])> = match &per_query {
        Some(m) => {
            if let Some(&bad) = m.keys().find(|&&q| q >= data.len()) {
                return Err(CliError::Input(format!("{}: query_id {bad} is out of range for {} rows", a.importance.display(), data.len())));
            }
            m.iter().map(|(&q, o)| (q, o.as_slice())).collect()
        }
        None => (0..data.len()).map(|q| (q, global.as_slice())).collect(),
    };
    let queries: Vec<(usize, &[usize])> = queries.into_iter().filter(|(q, _)| model.predict_unchecked(data.row(*q))).collect();
    let p = prep.space.n_features();
    let exact = SearchOptions { depth_limit: p, max_explanations: 1 };
    let rows: Vec<(usize, Option<usize>, Option<usize>)> = queries
        .par_iter()
        .map(|&(q, order)| -> Result<_, SevError> {
            let cube = Hypercube::new(data.row(q), reference, &prep.space.groups)?;
            Ok((q, flip_count(&model, &cube, order)?, sev_minus(&model, &cube, &exact)?.value))
        })
        .collect::<Result<_, _>>()?;
    let config = json!({ "split": a.split });
    let mut out = OutDir::create(out_dir, "compare", a.common.seed, &config)?;
    out.input(&a.model)?;
    out.input(&a.importance)?;
    prep.record_inputs(&mut out, &[a.split.as_str()])?;
    let mut csv = String::from("query_id,flip_count,sev_minus\n");
    let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
    for (q, f, s) in &rows {
        csv.push_str(&format!("{q},{},{}\n", opt(*f), opt(*s)));
    }
    let flips: Vec<usize> = rows.iter().filter_map(|r| r.1).collect();
    let sevs: Vec<usize> = rows.iter().filter_map(|r| r.2).collect();
    let summary = CompareSummary {
        n_queries: rows.len(),
        mean_flip_count: mean(&flips),
        mean_sev_minus: mean(&sevs),
        n_flip_equals_sev: rows.iter().filter(|r| r.1.is_some() && r.1 == r.2).count(),
        flip_histogram: histogram(&flips),
        sev_minus_histogram: histogram(&sevs),
    };
    out.write("compare.csv", csv.as_bytes())?;
    out.write("compare_summary.json", &pretty(&summary))?;
    out.finish()?;
    let m = |v: Option<f64>| v.map_or("n/a".into(), sig4);
    println!(
        "queries {}  mean flips {}  mean SEV- {}  flips equal to SEV- on {}",
        summary.n_queries,
        m(summary.mean_flip_count),
        m(summary.mean_sev_minus),
        summary.n_flip_equals_sev
    );
    Ok(())
}

pub fn volcheck(a: &VolcheckArgs) -> Result<(), CliError> {
    let out_dir = require_out(&a.common, "volcheck")?;
    let seed = a.common.seed.unwrap_or(0);
    let config = json!({ "samples": a.samples, "p": a.model.is_none().then_some(a.p) });
    let mut out = OutDir::create(out_dir, "volcheck", Some(seed), &config)?;
    let (params, reference, sample_box) = match (&a.model, &a.data) {
        (Some(model_path), Some(data)) => {
            let model = load_model(model_path)?;
            let prep = PreparedDir::load(data)?;
            prep.check_model(&model)?;
            out.input(model_path)?;
            prep.record_inputs(&mut out, &[])?;
            let ModelParams::Linear(lp) = model.params else {
                return Err(CliError::Usage("volcheck needs a linear model".into()));
            };
            (lp, prep.reference.values, SampleBox::Transformed)
        }
        _ => (LinearParams { intercept: -1.0, coef: vec![1.0; a.p] }, vec![0.0; a.p], SampleBox::Bounds(vec![(0.0, 1.0); a.p])),
    };
    let report = mc_volume_check(&params, &reference, &sample_box, a.samples, seed)?;
    let z = report.z_score();
    let within = z.abs() <= 3.0;
    out.write("volcheck.json", &pretty(&json!({ "report": report, "z_score": z, "within_3_stderr": within })))?;
    out.finish()?;
    println!(
        "p {}  fraction with SEV+ >= 2: {} (stderr {})  expected {}  z {}  volume product {}",
        report.p,
        sig4(report.mc_fraction),
        sig4(report.mc_stderr),
        sig4(report.expected),
        sig4(z),
        sig4(report.product)
    );
    if !within {
        return Err(CliError::Compute(format!("Monte-Carlo fraction is {} standard errors from the expected value", sig4(z))));
    }
    Ok(())
}

pub fn stats(a: &StatsArgs) -> Result<(), CliError> {
    let path = &a.explanations;
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut n_errors = 0;
    let mut effective = Vec::new();
    let mut explained = Vec::new();
    let mut features_used = 0;
    let mut kind = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line).map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))?;
        if v.get("error").is_some() {
            n_errors += 1;
            continue;
        }
        kind = kind.or_else(|| v.get("kind").and_then(Value::as_str).map(String::from));
        let e = v.get("effective_value").and_then(Value::as_u64).ok_or_else(|| io_err(path, format!("line {}: missing effective_value", i + 1)))? as usize;
        match v.get("value").and_then(Value::as_u64) {
            Some(x) => explained.push(x as usize),
            None => features_used = e,
        }
        effective.push(e);
    }
    let n = effective.len();
    let n_unexplained = n - explained.len();
    let summary = SevSummary {
        n_queries: n,
        n_errors,
        n_unexplained,
        pct_unexplained: if n == 0 { f64::NAN } else { 100.0 * n_unexplained as f64 / n as f64 },
        mean: mean(&effective).unwrap_or(f64::NAN),
        histogram: histogram(&explained),
    };
    let mark = match kind.as_deref() {
        Some("plus") => "+",
        Some("minus") => "-",
        Some("restricted") => "(r)",
        _ => "",
    };
    println!("{}", summary_line(mark, &summary));
    if let Some(dir) = &a.common.out {
        let mut out = OutDir::create(dir, "stats", a.common.seed, &json!({}))?;
        out.input(path)?;
        out.write("stats.csv", stats_csv(&summary, None, features_used).as_bytes())?;
        out.finish()?;
    }
    Ok(())
}
