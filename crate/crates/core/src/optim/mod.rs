//! SEV-aware training: surrogate losses, the combined objective, the
//! trainer, volume calculus for linear models, and evaluation metrics.

use thiserror::Error;

pub mod config;
pub mod losses;
pub mod metrics;
pub mod objective;
pub mod optimizer;
pub mod trainer;
pub mod volume;

pub use config::{SevTerm, TrainConfig};
pub use losses::VolClamp;
pub use metrics::{accuracy, auc, evaluate, Metrics};
pub use objective::{objective_grad, total_objective, ObjectiveValue};
pub use optimizer::{Adam, Optimizer, OptimizerKind};
pub use trainer::{history_csv, train, EpochRecord, TrainOutcome};
pub use volume::{mc_volume_check, volume_product, SampleBox, VolumeReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("no positively predicted queries")]
    EmptyPositives,
    #[error("every feature is restricted; nothing can be aligned")]
    AllFeaturesRestricted,
    #[error("reference is predicted positive")]
    ReferenceNotNegative,
    #[error("the volume loss is defined for linear models only")]
    VolOptOnNonlinearModel,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension {0} is outside the supported range 2..=6")]
    DimensionTooLarge(usize),
    #[error("both classes are needed")]
    SingleClassData,
}
