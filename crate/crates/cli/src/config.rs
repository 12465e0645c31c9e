use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fairscope_core::data::{
    generate_scenario, load_csv, split, Dataset, GroupLabels, LabeledData, LoadOptions, ScenarioConfig,
};
use fairscope_core::learners::{LogisticHyperparams, TreeHyperparams};
use fairscope_core::lda::{BaselineLearner, BaselineSpec, SearchConfig, Strategy};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Every key any command reads, in one flat namespace. Keys a command does
/// not use are accepted and ignored; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // common
    pub seed: u64,
    pub threshold: f64,
    pub group_column: String,
    pub outcome_column: String,
    pub id_column: Option<String>,
    pub input: Option<PathBuf>,
    pub train_fraction: f64,
    pub n_bins: usize,

    // synthetic data, used when no input file is given
    pub n_rows: usize,
    pub base_rate_protected: f64,
    pub base_rate_control: f64,
    pub protected_fraction: f64,
    pub proxy_correlation: f64,
    pub n_noise_features: usize,

    // model
    pub learner: BaselineLearner,
    pub features: Option<Vec<String>>,
    pub model: Option<PathBuf>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    pub max_depth: usize,
    pub min_leaf_size: usize,
    pub cutoff_grid_size: usize,

    // audit / search
    pub air_threshold: f64,

    // mitigate
    pub technique: Technique,
    pub grid: Option<Vec<f64>>,
    pub adversary_learning_rate: f64,

    // search
    pub business_floor: Option<f64>,
    pub floor_margin: f64,
    pub epsilon_predictiveness: f64,
    pub min_air_gain: f64,
    pub budget: usize,
    pub strategies: Vec<StrategyName>,
    pub lambda_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,

    // impossibility
    pub group_sizes: [usize; 2],
    pub cells_per_group: usize,
    pub grid_steps: usize,
    pub tolerance: f64,
    pub layouts: Vec<Layout>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    Lambda,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    DropOne,
    AddOne,
    Hyperparams,
    Lambda,
    Alpha,
}

/// How rows of a group are spread over feature cells in the impossibility
/// family: `pure` puts defaulters and non-defaulters in separate cells,
/// `mixed` deals rows round-robin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Pure,
    Mixed,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scenario = ScenarioConfig::default();
        let logistic = LogisticHyperparams::default();
        let tree = TreeHyperparams::default();
        let search = SearchConfig::default();
        RunConfig {
            seed: 0,
            threshold: 0.5,
            group_column: "group".into(),
            outcome_column: "default".into(),
            id_column: None,
            input: None,
            train_fraction: 0.7,
            n_bins: 10,
            n_rows: scenario.n_rows,
            base_rate_protected: scenario.base_rate_protected,
            base_rate_control: scenario.base_rate_control,
            protected_fraction: scenario.protected_fraction,
            proxy_correlation: scenario.proxy_correlation,
            n_noise_features: scenario.n_noise_features,
            learner: BaselineLearner::Logistic,
            features: None,
            model: None,
            learning_rate: logistic.learning_rate,
            epochs: logistic.epochs,
            l2_penalty: logistic.l2_penalty,
            max_depth: tree.max_depth,
            min_leaf_size: tree.min_leaf_size,
            cutoff_grid_size: tree.cutoff_grid_size,
            air_threshold: search.air_threshold,
            technique: Technique::Lambda,
            grid: None,
            adversary_learning_rate: 1.0,
            business_floor: None,
            floor_margin: search.floor_margin,
            epsilon_predictiveness: search.epsilon_predictiveness,
            min_air_gain: search.min_air_gain,
            budget: search.budget,
            strategies: vec![
                StrategyName::DropOne,
                StrategyName::AddOne,
                StrategyName::Hyperparams,
                StrategyName::Lambda,
                StrategyName::Alpha,
            ],
            lambda_grid: vec![0.0, 0.5, 1.0],
            alpha_grid: vec![0.5, 1.0, 2.0],
            group_sizes: [4, 4],
            cells_per_group: 2,
            grid_steps: 20,
            tolerance: 1e-9,
            layouts: vec![Layout::Pure, Layout::Mixed],
        }
    }
}

impl RunConfig {
    /// Reads the JSON config file (if any), then applies flag overrides.
    pub fn load(path: Option<&Path>, overrides: Vec<(&str, Value)>) -> Result<Self> {
        let mut map = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                match serde_json::from_str::<Value>(&text).with_context(|| format!("parsing config {}", p.display()))? {
                    Value::Object(m) => m,
                    _ => bail!("config {} must be a JSON object", p.display()),
                }
            }
            None => Map::new(),
        };
        for (key, value) in overrides {
            map.insert(key.to_string(), value);
        }
        serde_json::from_value(Value::Object(map)).context("invalid configuration")
    }

    pub fn check_common(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            bail!("threshold must lie in [0, 1], got {}", self.threshold);
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            bail!("train_fraction must lie in (0, 1], got {}", self.train_fraction);
        }
        if self.n_bins == 0 {
            bail!("n_bins must be at least 1");
        }
        if self.input.is_none() {
            self.scenario().validate()?;
        }
        Ok(())
    }

    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            n_rows: self.n_rows,
            base_rate_protected: self.base_rate_protected,
            base_rate_control: self.base_rate_control,
            protected_fraction: self.protected_fraction,
            proxy_correlation: self.proxy_correlation,
            n_noise_features: self.n_noise_features,
            seed: self.seed,
        }
    }

    pub fn load_options(&self) -> LoadOptions {
        let opts = LoadOptions::new(self.outcome_column.clone()).group_column(self.group_column.clone());
        match &self.id_column {
            Some(id) => opts.id_column(id.clone()),
            None => opts,
        }
    }

    /// The input CSV, or a generated scenario when no input is configured.
    pub fn dataset(&self) -> Result<(Dataset, GroupLabels)> {
        match &self.input {
            Some(path) => {
                let (ds, groups) =
                    load_csv(path, &self.load_options()).with_context(|| format!("loading {}", path.display()))?;
                let groups = groups.context("input has no group column")?;
                Ok((ds, groups))
            }
            None => Ok(generate_scenario(&self.scenario())?),
        }
    }

    /// Train/evaluation partitions. With `train_fraction = 1` both are the
    /// full data set.
    pub fn partitions(&self, ds: Dataset, groups: GroupLabels) -> Result<(LabeledData, LabeledData)> {
        if self.train_fraction == 1.0 {
            let all = LabeledData::new(ds, groups)?;
            return Ok((all.clone(), all));
        }
        Ok(split(&ds, &groups, self.train_fraction, self.seed)?)
    }

    pub fn logistic(&self) -> LogisticHyperparams {
        LogisticHyperparams {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            l2_penalty: self.l2_penalty,
            seed: self.seed,
        }
    }

    pub fn tree(&self) -> TreeHyperparams {
        TreeHyperparams {
            max_depth: self.max_depth,
            min_leaf_size: self.min_leaf_size,
            cutoff_grid_size: self.cutoff_grid_size,
            seed: self.seed,
        }
    }

    pub fn search(&self) -> SearchConfig {
        let strategies = self
            .strategies
            .iter()
            .map(|s| match s {
                StrategyName::DropOne => Strategy::DropOne,
                StrategyName::AddOne => Strategy::AddOne,
                StrategyName::Hyperparams => Strategy::Hyperparams { grid: Vec::new() },
                StrategyName::Lambda => Strategy::Lambda {
                    values: self.lambda_grid.clone(),
                },
                StrategyName::Alpha => Strategy::Alpha {
                    values: self.alpha_grid.clone(),
                },
            })
            .collect();
        SearchConfig {
            threshold: self.threshold,
            air_threshold: self.air_threshold,
            business_floor: self.business_floor,
            floor_margin: self.floor_margin,
            epsilon_predictiveness: self.epsilon_predictiveness,
            min_air_gain: self.min_air_gain,
            budget: self.budget,
            strategies,
            baseline: BaselineSpec {
                learner: self.learner,
                features: self.features.clone(),
                logistic: self.logistic(),
                tree: self.tree(),
            },
            n_bins: self.n_bins,
            seed: self.seed,
        }
    }
}
