//! Sparse explanation values over the query/reference hypercube.
//!
//! Vertex `b` of the hypercube mixes a query with the reference: feature `j`
//! takes the query's encoded span when bit `j` is set, the reference's span
//! otherwise. One bit per original feature, so one-hot groups move together.
//!
//! * SEV⁺: fewest query features placed on the reference that make the
//!   prediction positive (search from `b = 0`).
//! * SEV⁻: fewest query features moved to the reference that make the
//!   prediction negative (search from `b = 1`).
//! * Restricted SEV: SEV⁻ with a set of features pinned to the query.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Span;
use crate::model::Classifier;

pub mod batch;
pub mod flip;
pub mod hypercube;
pub mod search;

pub use batch::{batch_sev, record_json, transition_counts, BatchOptions, QueryRecord, SevStats, SevSummary};
pub use flip::flip_count;
pub use hypercube::{vertex_to_point, Hypercube, VertexMask, MAX_FEATURES};
pub use search::{brute_force_sev, compute_sev, sev_minus, sev_plus, sev_restricted, SearchOptions, BRUTE_FORCE_MAX_FEATURES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SevError {
    #[error("reference is predicted positive; SEV needs a negatively predicted reference (train with the reference penalty term)")]
    ReferenceNotNegative,
    #[error("query is not predicted positive")]
    QueryNotPositive,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("restricted set is invalid: {0}")]
    RestrictedSetInvalid(String),
    #[error("{found} features exceed the limit of {limit}")]
    TooManyFeatures { found: usize, limit: usize },
    #[error("ordering is not a permutation of the {0} features")]
    InvalidPermutation(usize),
}

/// Anything that makes binary predictions on encoded vectors.
pub trait Predictor: Sync {
    fn input_dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> bool;
    /// What an unexplained query counts as in batch means.
    fn features_used(&self, groups: &[Span]) -> usize {
        groups.len()
    }
}

impl Predictor for Classifier {
    fn input_dim(&self) -> usize {
        Classifier::input_dim(self)
    }

    fn predict(&self, x: &[f64]) -> bool {
        self.predict_unchecked(x)
    }

    fn features_used(&self, groups: &[Span]) -> usize {
        Classifier::features_used(self, groups)
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }

    fn predict(&self, x: &[f64]) -> bool {
        (**self).predict(x)
    }

    fn features_used(&self, groups: &[Span]) -> usize {
        (**self).features_used(groups)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SevKind {
    Plus,
    Minus,
    Restricted,
}

impl std::fmt::Display for SevKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SevKind::Plus => "plus",
            SevKind::Minus => "minus",
            SevKind::Restricted => "restricted",
        })
    }
}

impl std::str::FromStr for SevKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" => Ok(SevKind::Plus),
            "minus" => Ok(SevKind::Minus),
            "restricted" => Ok(SevKind::Restricted),
            other => Err(format!("unknown SEV kind `{other}` (plus, minus, restricted)")),
        }
    }
}

/// One minimal explanation: the vertex and the features that changed
/// relative to the search start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Explanation {
    pub mask: VertexMask,
    pub changed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SevResult {
    pub kind: SevKind,
    /// `None` when no flip was found within the allowed moves.
    pub value: Option<usize>,
    pub explanations: Vec<Explanation>,
    /// Vertices evaluated during the search.
    pub expanded: usize,
    pub depth_limit_hit: bool,
}

impl SevResult {
    pub fn is_unexplained(&self) -> bool {
        self.value.is_none()
    }
}
