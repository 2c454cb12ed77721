use std::fmt::Write;

use crate::sev::{SevStats, SevSummary};

/// `x` with four significant digits, switching to exponent form for very
/// large or small magnitudes.
pub fn sig4(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.000".into();
    }
    let e0 = x.abs().log10().floor() as i32;
    // rounding can carry into the next decade, e.g. 9.9996 -> 10.00
    let scale = 10f64.powi(e0 - 3);
    let rounded = (x / scale).round() * scale;
    let e = rounded.abs().log10().floor() as i32;
    if !(-4..6).contains(&e) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - e).max(0) as usize;
    format!("{rounded:.decimals$}")
}

/// Two-column `metric,value` table at full precision.
pub fn stats_csv(summary: &SevSummary, stats: Option<&SevStats>, features_used: usize) -> String {
    let mut out = String::from("metric,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k},{v}");
    };
    if let Some(s) = stats {
        row("kind", s.kind.to_string());
        row("n_rows", s.n_rows.to_string());
        row("n_skipped", s.n_skipped.to_string());
    }
    row("n_queries", summary.n_queries.to_string());
    row("n_errors", summary.n_errors.to_string());
    row("n_unexplained", summary.n_unexplained.to_string());
    row("pct_unexplained", summary.pct_unexplained.to_string());
    row("mean", summary.mean.to_string());
    row("features_used", features_used.to_string());
    if let Some(s) = stats {
        for (name, q) in [("runtime_p50_us", 0.5), ("runtime_p90_us", 0.9), ("runtime_p99_us", 0.99), ("runtime_max_us", 1.0)] {
            row(name, s.runtime_percentile_us(q).to_string());
        }
    }
    for (k, v) in &summary.histogram {
        row(&format!("hist_{k}"), v.to_string());
    }
    out
}

pub fn summary_line(kind: &str, summary: &SevSummary) -> String {
    format!(
        "queries {}  mean SEV{} {}  unexplained {}%  errors {}",
        summary.n_queries,
        kind,
        sig4(summary.mean),
        sig4(summary.pct_unexplained),
        summary.n_errors
    )
}
