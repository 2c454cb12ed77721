use serde::{Deserialize, Serialize};

use super::losses::VolClamp;
use super::{OptimError, OptimizerKind};

/// Which SEV surrogate joins the objective after warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SevTerm {
    #[default]
    None,
    VolOpt,
    AllOptPlus,
    AllOptMinus,
    AllOptRestricted,
}

impl std::str::FromStr for SevTerm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SevTerm::None),
            "vol_opt" => Ok(SevTerm::VolOpt),
            "all_opt_plus" => Ok(SevTerm::AllOptPlus),
            "all_opt_minus" => Ok(SevTerm::AllOptMinus),
            "all_opt_restricted" => Ok(SevTerm::AllOptRestricted),
            other => Err(format!("unknown SEV term `{other}` (none, vol_opt, all_opt_plus, all_opt_minus, all_opt_restricted)")),
        }
    }
}

impl std::fmt::Display for SevTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SevTerm::None => "none",
            SevTerm::VolOpt => "vol_opt",
            SevTerm::AllOptPlus => "all_opt_plus",
            SevTerm::AllOptMinus => "all_opt_minus",
            SevTerm::AllOptRestricted => "all_opt_restricted",
        })
    }
}

impl SevTerm {
    /// The SEV flavour the term is meant to lower.
    pub fn sev_kind(self) -> crate::sev::SevKind {
        use crate::sev::SevKind;
        match self {
            SevTerm::None | SevTerm::VolOpt | SevTerm::AllOptPlus => SevKind::Plus,
            SevTerm::AllOptMinus => SevKind::Minus,
            SevTerm::AllOptRestricted => SevKind::Restricted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Weight of the SEV term.
    pub c1: f64,
    /// Weight of the reference penalty.
    pub c2: f64,
    pub margin: f64,
    pub eps: f64,
    pub threshold: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub warmup_epochs: usize,
    pub sev_epochs: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub vol_clamp: VolClamp,
    /// Original-feature indices that may not be aligned.
    pub restricted: Vec<usize>,
    pub monitor_queries: usize,
    pub monitor_depth: usize,
    /// Monitor SEV every this many epochs; 0 turns monitoring off.
    pub monitor_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 10.0,
            margin: 0.05,
            eps: 1e-6,
            threshold: 0.5,
            learning_rate: 0.1,
            batch_size: 128,
            warmup_epochs: 70,
            sev_epochs: 30,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            vol_clamp: VolClamp::Floor,
            restricted: Vec::new(),
            monitor_queries: 256,
            monitor_depth: 3,
            monitor_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn epochs(&self) -> usize {
        self.warmup_epochs + self.sev_epochs
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |m: &str| Err(OptimError::InvalidConfig(m.to_string()));
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return bad("c1 and c2 must be non-negative");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        if !(self.margin > 0.0 && self.margin < self.threshold) {
            return bad("margin must lie in (0, threshold)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        Ok(())
    }
}
