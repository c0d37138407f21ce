//! Desk-scale grounded training: a precursor model trained first, then a DG
//! model trained with cross-entropy plus a divergence term that keeps its
//! features close to the frozen precursor's.

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod network;
pub mod synthetic;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{
    check_losses, finite_diff_check, GradCheckOptions, GradCheckReport, LossCheckSetup, TermCheck,
};
pub use loss::{cross_entropy, grounding_js, kl_head_regularizer};
pub use network::{init_featurizer, Checkpoint, Dense, InitMode, LinearHead, Model, ToyFeaturizer};
pub use train::{
    smos_total_loss, term_loss_and_grad, train_erm, train_grounded, train_precursor, LabeledSet, LossBreakdown,
    LossTerm, LossWeights, TrainConfig, TrainOutcome,
};

use crate::divergence::DivergenceError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmosError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss is not finite when perturbing coordinate {coordinate}")]
    NonFiniteLoss { coordinate: usize },
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("io error: {0}")]
    Io(String),
    #[error("cannot parse checkpoint: {0}")]
    Parse(String),
}

impl SmosError {
    pub fn kind(&self) -> &'static str {
        match self {
            SmosError::ShapeMismatch(_) => "ShapeMismatch",
            SmosError::DimensionMismatch { .. } => "DimensionMismatch",
            SmosError::LabelOutOfRange { .. } => "LabelOutOfRange",
            SmosError::EmptyBatch => "EmptyBatch",
            SmosError::InvalidConfig(_) => "InvalidConfig",
            SmosError::NonFiniteLoss { .. } => "NonFiniteLoss",
            SmosError::Divergence(_) => "DivergenceError",
            SmosError::Io(_) => "IoError",
            SmosError::Parse(_) => "ParseError",
        }
    }
}

pub type Result<T> = std::result::Result<T, SmosError>;
