//! Repeated stratified cross-validation and its metrics.

pub mod cv;
pub mod folds;
pub mod metrics;
pub mod stats;

pub use cv::{run_cv, CvPlan, CvReport, Dataset, Grouping};
pub use folds::{stratified_group_kfold, stratified_kfold};
pub use metrics::{confusion_matrix, f1_score, roc_curve, Averaging, Roc};
pub use stats::{t_test, TTest};

use crate::features::FeatureError;
use crate::models::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("label {0} outside the class set")]
    UnknownLabel(usize),
    #[error("{n} samples (or groups) cannot fill {k} folds")]
    TooFewSamples { n: usize, k: usize },
    #[error("AUC undefined for class {0}: only one class present in y_true")]
    UndefinedAuc(usize),
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("reports are not comparable: {0}")]
    Incomparable(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
