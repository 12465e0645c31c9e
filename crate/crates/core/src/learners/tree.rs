use serde::{Deserialize, Serialize};

use super::logistic::require_trainable;
use super::model::{
    Hyperparams, Model, ModelKind, Parameters, TrainingInfo, TreeNode, TreeNodes, MODEL_FORMAT_VERSION,
};
use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeHyperparams {
    pub max_depth: usize,
    pub min_leaf_size: usize,
    /// Number of empirical-quantile cutoffs tried per feature at each node.
    pub cutoff_grid_size: usize,
    /// Unused by the deterministic grower; recorded in model metadata.
    pub seed: u64,
}

impl Default for TreeHyperparams {
    fn default() -> Self {
        TreeHyperparams {
            max_depth: 3,
            min_leaf_size: 20,
            cutoff_grid_size: 32,
            seed: 0,
        }
    }
}

impl TreeHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.min_leaf_size == 0 {
            return Err(Error::InvalidConfig("min_leaf_size must be at least 1".into()));
        }
        if self.cutoff_grid_size < 2 {
            return Err(Error::InvalidConfig("cutoff_grid_size must be at least 2".into()));
        }
        Ok(())
    }
}

/// Row counts reaching a node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct NodeStats {
    pub n: usize,
    pub defaults: usize,
    pub protected: usize,
}

impl NodeStats {
    pub fn rate(&self) -> f64 {
        self.defaults as f64 / self.n as f64
    }

    /// Rows the leaf classifies correctly when it predicts its majority class.
    pub fn correct(&self) -> usize {
        if 2 * self.defaults >= self.n {
            self.defaults
        } else {
            self.n - self.defaults
        }
    }

    pub fn control(&self) -> usize {
        self.n - self.protected
    }

    /// Approvals per group when the leaf's score is compared to `threshold`.
    pub fn approvals(&self, threshold: f64) -> (usize, usize) {
        if self.n > 0 && self.rate() < threshold {
            (self.protected, self.control())
        } else {
            (0, 0)
        }
    }

    fn minus(&self, other: &NodeStats) -> NodeStats {
        NodeStats {
            n: self.n - other.n,
            defaults: self.defaults - other.defaults,
            protected: self.protected - other.protected,
        }
    }
}

/// Ranks candidate splits during greedy growth. Higher scores win; ties keep
/// the earlier candidate (lower feature index, then lower cutoff).
pub(crate) trait SplitObjective {
    fn score(&self, node: &NodeStats, left: &NodeStats, right: &NodeStats) -> f64;

    /// Called once the grower commits to a split.
    fn commit(&mut self, _node: &NodeStats, _left: &NodeStats, _right: &NodeStats) {}
}

/// Plain accuracy: number of rows the two children classify correctly.
pub(crate) struct AccuracyObjective;

impl SplitObjective for AccuracyObjective {
    fn score(&self, _node: &NodeStats, left: &NodeStats, right: &NodeStats) -> f64 {
        (left.correct() + right.correct()) as f64
    }
}

pub(crate) fn stats_of(rows: &[usize], outcome: &[u8], protected: Option<&[bool]>) -> NodeStats {
    NodeStats {
        n: rows.len(),
        defaults: rows.iter().map(|&r| outcome[r] as usize).sum(),
        protected: protected.map_or(0, |p| rows.iter().filter(|&&r| p[r]).count()),
    }
}

/// Candidate cutoffs for one feature over `rows`: observed values at the
/// `k / (grid + 1)` empirical quantiles, deduplicated, ascending. A cutoff
/// equal to the node minimum (empty left side) is dropped.
pub(crate) fn quantile_cutoffs(sorted_values: &[f64], grid: usize) -> Vec<f64> {
    let m = sorted_values.len();
    let mut out: Vec<f64> = Vec::with_capacity(grid);
    for k in 1..=grid {
        let c = sorted_values[k * m / (grid + 1)];
        if c > sorted_values[0] && out.last() != Some(&c) {
            out.push(c);
        }
    }
    out
}

struct Grower<'a, O> {
    columns: Vec<&'a [f64]>,
    outcome: &'a [u8],
    protected: Option<&'a [bool]>,
    hp: &'a TreeHyperparams,
    objective: &'a mut O,
    nodes: Vec<TreeNode>,
}

struct Best {
    feature: usize,
    cutoff: f64,
    score: f64,
    left: NodeStats,
}

impl<O: SplitObjective> Grower<'_, O> {
    fn leaf(&mut self, stats: &NodeStats) -> usize {
        self.nodes.push(TreeNode::Leaf {
            score: stats.rate(),
            n_rows: stats.n,
            n_defaults: stats.defaults,
        });
        self.nodes.len() - 1
    }

    fn best_split(&self, rows: &[usize], stats: &NodeStats) -> Option<Best> {
        let min_leaf = self.hp.min_leaf_size;
        let mut best: Option<Best> = None;
        let mut sorted = rows.to_vec();
        for (j, col) in self.columns.iter().enumerate() {
            sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            let values: Vec<f64> = sorted.iter().map(|&r| col[r]).collect();
            let mut prefix = vec![NodeStats::default(); sorted.len() + 1];
            for (i, &r) in sorted.iter().enumerate() {
                let p = self.protected.is_some_and(|p| p[r]) as usize;
                prefix[i + 1] = NodeStats {
                    n: i + 1,
                    defaults: prefix[i].defaults + self.outcome[r] as usize,
                    protected: prefix[i].protected + p,
                };
            }
            for cutoff in quantile_cutoffs(&values, self.hp.cutoff_grid_size) {
                let split_at = values.partition_point(|&v| v < cutoff);
                if split_at < min_leaf || sorted.len() - split_at < min_leaf {
                    continue;
                }
                let left = prefix[split_at];
                let right = stats.minus(&left);
                let score = self.objective.score(stats, &left, &right);
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(Best {
                        feature: j,
                        cutoff,
                        score,
                        left,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let stats = stats_of(&rows, self.outcome, self.protected);
        let pure = stats.defaults == 0 || stats.defaults == stats.n;
        if depth >= self.hp.max_depth || pure || stats.n < 2 * self.hp.min_leaf_size {
            return self.leaf(&stats);
        }
        let Some(best) = self.best_split(&rows, &stats) else {
            return self.leaf(&stats);
        };
        let right_stats = stats.minus(&best.left);
        self.objective.commit(&stats, &best.left, &right_stats);

        let col = self.columns[best.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| col[r] < best.cutoff);
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            score: 0.0,
            n_rows: 0,
            n_defaults: 0,
        });
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[at] = TreeNode::Split {
            feature: best.feature,
            cutoff: best.cutoff,
            left,
            right,
        };
        at
    }
}

/// Greedy depth-first growth. `protected` (one flag per row) is only
/// consulted by fairness-aware objectives.
pub(crate) fn grow<O: SplitObjective>(
    train: &Dataset,
    protected: Option<&[bool]>,
    hp: &TreeHyperparams,
    objective: &mut O,
) -> TreeNodes {
    let mut grower = Grower {
        columns: (0..train.n_features()).map(|j| train.column_at(j)).collect(),
        outcome: train.outcome(),
        protected,
        hp,
        objective,
        nodes: Vec::new(),
    };
    grower.build((0..train.n_rows()).collect(), 0);
    TreeNodes {
        nodes: grower.nodes,
    }
}

pub(crate) fn tree_model(train: &Dataset, kind: ModelKind, nodes: TreeNodes, hp: &TreeHyperparams) -> Model {
    Model {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        feature_subset: train.feature_names().to_vec(),
        parameters: Parameters::Tree(nodes),
        training: TrainingInfo {
            hyperparams: Hyperparams::Tree(hp.clone()),
            lambda: None,
            decision_threshold: None,
            alpha: None,
            curve: None,
        },
    }
}

/// Depth-limited classification tree. Each node tries every feature at
/// `cutoff_grid_size` quantile cutoffs and keeps the split whose two leaves
/// classify the most rows correctly. Leaf scores are observed default rates.
pub fn fit_tree(train: &Dataset, hp: &TreeHyperparams) -> Result<Model> {
    hp.validate()?;
    require_trainable(train)?;
    let nodes = grow(train, None, hp, &mut AccuracyObjective);
    Ok(tree_model(train, ModelKind::Tree, nodes, hp))
}
