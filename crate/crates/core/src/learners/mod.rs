//! Baseline risk learners: logistic regression by gradient descent and a
//! depth-limited accuracy-split decision tree.
//!
//! Fit functions take a [`Dataset`](crate::data::Dataset) only; group labels
//! cannot reach them.

mod logistic;
mod model;
mod tree;

pub use logistic::{fit_logistic, logistic_loss_trace, LogLossObjective, LogisticHyperparams};
pub use model::{
    CurvePoint, Hyperparams, LinearWeights, Model, ModelKind, Parameters, TrainingCurve, TrainingInfo,
    TreeNode, TreeNodes, MODEL_FORMAT_VERSION,
};
pub use tree::{fit_tree, TreeHyperparams};

pub(crate) use logistic::{is_snapshot, require_trainable};
pub(crate) use tree::{grow, stats_of, tree_model, NodeStats, SplitObjective};

use crate::error::Result;
use crate::metrics::{Decisions, RiskScores};

/// Approve (favorable) iff `score < threshold`.
pub fn threshold_decisions(scores: &RiskScores, threshold: f64) -> Result<Decisions> {
    Decisions::from_scores(scores, threshold)
}
