//! Sparse explanation values (SEV) for binary classifiers on tabular data.
//!
//! * [`data`]: schema, CSV ingestion, stratified splits, encoding, reference.
//! * [`model`]: linear, MLP and boosted-tree classifiers behind one interface.
//! * [`sev`]: the hypercube search and batch statistics.
//! * [`optim`]: SEV-aware losses, training and volume checks.
//! * [`cli`]: the `sevkit` command line.

pub mod cli;
pub mod data;
pub mod fsutil;
pub mod model;
pub mod optim;
pub mod sev;
pub mod synth;
