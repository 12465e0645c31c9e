//! In-training mitigation: the fairness-regularized decision tree and
//! adversarial debiasing.

mod adversarial;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Group, GroupLabels};
use crate::error::{Error, Result};
use crate::learners::{grow, require_trainable, stats_of, tree_model, Model, ModelKind, NodeStats, SplitObjective, TreeHyperparams};

pub use adversarial::{
    adversary_leakage, fit_adversarial, leakage_from_scores, AdversarialConfig, StepParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationConfig {
    /// Weight on the disparate-impact penalty; 0 disables it.
    pub lambda: f64,
    /// Leaf scores below this threshold count as approvals when computing AIR.
    pub decision_threshold: f64,
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        RegularizationConfig {
            lambda: 0.0,
            decision_threshold: 0.5,
        }
    }
}

impl RegularizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return Err(Error::InvalidConfig(format!(
                "decision_threshold must lie in [0, 1], got {}",
                self.decision_threshold
            )));
        }
        Ok(())
    }
}

/// Accuracy and AIR of one candidate split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub accuracy: f64,
    /// `None` when the control group receives no approvals.
    pub air: Option<f64>,
}

/// `accuracy - lambda * (1 - min(air, 1))`, with an undefined AIR scored as 0.
pub fn regularized_objective(accuracy: f64, air: Option<f64>, lambda: f64) -> f64 {
    let air = air.unwrap_or(0.0).min(1.0);
    accuracy - lambda * (1.0 - air)
}

fn air_from_counts(approved: (usize, usize), sizes: (usize, usize)) -> Option<f64> {
    let (ap, ac) = approved;
    let (np, nc) = sizes;
    (ac > 0).then(|| (ap as f64 / np as f64) / (ac as f64 / nc as f64))
}

fn protected_flags(groups: &GroupLabels) -> Vec<bool> {
    groups.as_slice().iter().map(|&g| g == Group::Protected).collect()
}

/// Two-leaf rule at `feature < cutoff`: classification accuracy of the
/// leaves' majority predictions, and the AIR of approve/deny decisions made
/// by comparing each leaf's default rate with `threshold`.
pub fn evaluate_split(
    dataset: &Dataset,
    groups: &GroupLabels,
    feature: &str,
    cutoff: f64,
    threshold: f64,
) -> Result<SplitEvaluation> {
    groups.check_linked(dataset)?;
    groups.require_both()?;
    let col = dataset
        .column(feature)
        .ok_or_else(|| Error::MissingFeature(feature.to_string()))?;
    let flags = protected_flags(groups);
    let (left, right): (Vec<usize>, Vec<usize>) = (0..dataset.n_rows()).partition(|&r| col[r] < cutoff);
    let l = stats_of(&left, dataset.outcome(), Some(&flags));
    let r = stats_of(&right, dataset.outcome(), Some(&flags));
    let (lp, lc) = l.approvals(threshold);
    let (rp, rc) = r.approvals(threshold);
    let n = dataset.n_rows();
    let np = l.protected + r.protected;
    Ok(SplitEvaluation {
        accuracy: (l.correct() + r.correct()) as f64 / n as f64,
        air: air_from_counts((lp + rp, lc + rc), (np, n - np)),
    })
}

/// Ranks splits by the regularized objective evaluated on the whole tree
/// grown so far with the candidate applied.
struct FairObjective {
    lambda: f64,
    threshold: f64,
    n: usize,
    sizes: (usize, usize),
    correct: usize,
    approved: (usize, usize),
}

impl FairObjective {
    fn after(&self, node: &NodeStats, left: &NodeStats, right: &NodeStats) -> (usize, (usize, usize)) {
        let (np, nc) = node.approvals(self.threshold);
        let (lp, lc) = left.approvals(self.threshold);
        let (rp, rc) = right.approvals(self.threshold);
        (
            self.correct - node.correct() + left.correct() + right.correct(),
            (self.approved.0 - np + lp + rp, self.approved.1 - nc + lc + rc),
        )
    }
}

impl SplitObjective for FairObjective {
    fn score(&self, node: &NodeStats, left: &NodeStats, right: &NodeStats) -> f64 {
        let (correct, approved) = self.after(node, left, right);
        let accuracy = correct as f64 / self.n as f64;
        regularized_objective(accuracy, air_from_counts(approved, self.sizes), self.lambda)
    }

    fn commit(&mut self, node: &NodeStats, left: &NodeStats, right: &NodeStats) {
        let (correct, approved) = self.after(node, left, right);
        self.correct = correct;
        self.approved = approved;
    }
}

/// Decision tree whose splits trade accuracy against adverse impact.
///
/// Identical to [`fit_tree`](crate::learners::fit_tree) except for split
/// ranking; with `lambda = 0` it grows the same tree.
pub fn fit_fair_tree(
    train: &Dataset,
    groups: &GroupLabels,
    reg: &RegularizationConfig,
    hp: &TreeHyperparams,
) -> Result<Model> {
    reg.validate()?;
    hp.validate()?;
    require_trainable(train)?;
    groups.check_linked(train)?;
    groups.require_both()?;
    let flags = protected_flags(groups);
    let all: Vec<usize> = (0..train.n_rows()).collect();
    let root = stats_of(&all, train.outcome(), Some(&flags));
    let mut objective = FairObjective {
        lambda: reg.lambda,
        threshold: reg.decision_threshold,
        n: root.n,
        sizes: (root.protected, root.control()),
        correct: root.correct(),
        approved: root.approvals(reg.decision_threshold),
    };
    let nodes = grow(train, Some(&flags), hp, &mut objective);
    let mut model = tree_model(train, ModelKind::FairTree, nodes, hp);
    model.training.lambda = Some(reg.lambda);
    model.training.decision_threshold = Some(reg.decision_threshold);
    Ok(model)
}
