use serde::{Deserialize, Serialize};

use super::{LogisticHyperparams, TreeHyperparams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::RiskScores;
use crate::stats::sigmoid;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Tree,
    FairTree,
    AdversarialDebiased,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Tree => "tree",
            ModelKind::FairTree => "fair_tree",
            ModelKind::AdversarialDebiased => "adversarial_debiased",
        }
    }
}

/// Logistic scorer on standardized inputs: `sigmoid(b + sum_j w_j (x_j - m_j) / s_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
}

impl LinearWeights {
    pub fn logit(&self, row: impl Iterator<Item = f64>) -> f64 {
        let mut z = self.intercept;
        for (((x, w), m), s) in row
            .zip(&self.weights)
            .zip(&self.feature_means)
            .zip(&self.feature_scales)
        {
            z += w * ((x - m) / s);
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] < cutoff` go left.
    Split {
        feature: usize,
        cutoff: f64,
        left: usize,
        right: usize,
    },
    /// `score` is the observed default rate of the training rows reaching the leaf.
    Leaf {
        score: f64,
        n_rows: usize,
        n_defaults: usize,
    },
}

/// Nodes in pre-order; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNodes {
    pub nodes: Vec<TreeNode>,
}

impl TreeNodes {
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    cutoff,
                    left,
                    right,
                } => i = if row[*feature] < *cutoff { *left } else { *right },
                TreeNode::Leaf { score, .. } => return *score,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// `(feature index, cutoff)` of every split in pre-order.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, cutoff, .. } => Some((*feature, *cutoff)),
                TreeNode::Leaf { .. } => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Parameters {
    Linear(LinearWeights),
    Tree(TreeNodes),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "snake_case")]
pub enum Hyperparams {
    Logistic(LogisticHyperparams),
    Tree(TreeHyperparams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub loss: f64,
}

/// Loss snapshots taken during gradient training (about ten per run).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub predictor: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adversary: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub hyperparams: Hyperparams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<TrainingCurve>,
}

/// A fitted risk model. Serializes to a versioned JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub kind: ModelKind,
    pub feature_subset: Vec<String>,
    pub parameters: Parameters,
    pub training: TrainingInfo,
}

impl Model {
    /// Per-row default probability. Features are looked up by name, so the
    /// dataset may carry extra columns in any order.
    pub fn predict(&self, dataset: &Dataset) -> Result<RiskScores> {
        let cols = self
            .feature_subset
            .iter()
            .map(|name| dataset.column(name).ok_or_else(|| Error::MissingFeature(name.clone())))
            .collect::<Result<Vec<_>>>()?;
        let n = dataset.n_rows();
        let scores = match &self.parameters {
            Parameters::Linear(lin) => (0..n)
                .map(|r| sigmoid(lin.logit(cols.iter().map(|c| c[r]))))
                .collect(),
            Parameters::Tree(tree) => {
                let mut row = vec![0.0; cols.len()];
                (0..n)
                    .map(|r| {
                        for (v, c) in row.iter_mut().zip(&cols) {
                            *v = c[r];
                        }
                        tree.score(&row)
                    })
                    .collect()
            }
        };
        RiskScores::new(scores)
    }

    /// Pre-threshold logits of a linear model; `None` for trees.
    pub fn logits(&self, dataset: &Dataset) -> Result<Option<Vec<f64>>> {
        let Parameters::Linear(lin) = &self.parameters else {
            return Ok(None);
        };
        let cols = self
            .feature_subset
            .iter()
            .map(|name| dataset.column(name).ok_or_else(|| Error::MissingFeature(name.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(
            (0..dataset.n_rows())
                .map(|r| lin.logit(cols.iter().map(|c| c[r])))
                .collect(),
        ))
    }

    pub fn linear(&self) -> Option<&LinearWeights> {
        match &self.parameters {
            Parameters::Linear(l) => Some(l),
            Parameters::Tree(_) => None,
        }
    }

    pub fn tree(&self) -> Option<&TreeNodes> {
        match &self.parameters {
            Parameters::Tree(t) => Some(t),
            Parameters::Linear(_) => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let model: Model = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model format_version {}",
                model.format_version
            )));
        }
        Ok(model)
    }

    /// Canonical serialization of the fitted parameters alone.
    pub fn parameters_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.parameters)?)
    }
}
