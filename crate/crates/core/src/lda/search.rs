use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CandidateModel, StrategyTag};
use crate::data::LabeledData;
use crate::error::{Error, Result};
use crate::learners::{fit_logistic, fit_tree, Hyperparams, LogisticHyperparams, Model, TreeHyperparams};
use crate::mitigate::{fit_adversarial, fit_fair_tree, AdversarialConfig, RegularizationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineLearner {
    Logistic,
    Tree,
}

/// How the baseline model is trained. The logistic and tree settings also
/// seed the adversarial and fairness-regularized candidates respectively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSpec {
    pub learner: BaselineLearner,
    /// Feature subset; `None` uses every feature in the training data.
    pub features: Option<Vec<String>>,
    pub logistic: LogisticHyperparams,
    pub tree: TreeHyperparams,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        BaselineSpec {
            learner: BaselineLearner::Logistic,
            features: None,
            logistic: LogisticHyperparams::default(),
            tree: TreeHyperparams::default(),
        }
    }
}

impl BaselineSpec {
    pub fn hyperparams(&self) -> Hyperparams {
        match self.learner {
            BaselineLearner::Logistic => Hyperparams::Logistic(self.logistic.clone()),
            BaselineLearner::Tree => Hyperparams::Tree(self.tree.clone()),
        }
    }
}

/// One family of alternatives to try.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    /// Retrain without each baseline feature in turn.
    DropOne,
    /// Retrain with each available feature the baseline leaves out.
    AddOne,
    /// Retrain with each listed setting of the baseline learner; an empty
    /// grid uses a small neighbourhood of the baseline settings.
    Hyperparams {
        #[serde(default)]
        grid: Vec<Hyperparams>,
    },
    /// Fairness-regularized trees, one per penalty weight.
    Lambda { values: Vec<f64> },
    /// Adversarially debiased logistic models, one per adversary weight.
    Alpha { values: Vec<f64> },
}

impl Strategy {
    fn name(&self) -> &'static str {
        match self {
            Strategy::DropOne => "drop_one",
            Strategy::AddOne => "add_one",
            Strategy::Hyperparams { .. } => "hyperparams",
            Strategy::Lambda { .. } => "lambda",
            Strategy::Alpha { .. } => "alpha",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Approve iff score < threshold, for every model evaluated.
    pub threshold: f64,
    pub air_threshold: f64,
    /// Predictiveness floor; `None` uses majority-class rate + `floor_margin`.
    pub business_floor: Option<f64>,
    pub floor_margin: f64,
    pub epsilon_predictiveness: f64,
    pub min_air_gain: f64,
    /// Maximum number of alternative candidates trained.
    pub budget: usize,
    pub strategies: Vec<Strategy>,
    pub baseline: BaselineSpec,
    pub n_bins: usize,
    /// Seeds permutation importance.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            threshold: 0.5,
            air_threshold: 0.8,
            business_floor: None,
            floor_margin: 0.05,
            epsilon_predictiveness: 0.03,
            min_air_gain: 0.05,
            budget: 32,
            strategies: vec![
                Strategy::DropOne,
                Strategy::AddOne,
                Strategy::Hyperparams { grid: Vec::new() },
                Strategy::Lambda {
                    values: vec![0.0, 0.5, 1.0],
                },
                Strategy::Alpha {
                    values: vec![0.5, 1.0, 2.0],
                },
            ],
            baseline: BaselineSpec::default(),
            n_bins: 10,
            seed: 0,
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")))
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        unit_interval("threshold", self.threshold)?;
        non_negative("air_threshold", self.air_threshold)?;
        if let Some(f) = self.business_floor {
            unit_interval("business_floor", f)?;
        }
        non_negative("floor_margin", self.floor_margin)?;
        non_negative("epsilon_predictiveness", self.epsilon_predictiveness)?;
        non_negative("min_air_gain", self.min_air_gain)?;
        if self.n_bins == 0 {
            return Err(Error::InvalidConfig("n_bins must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("at least one strategy is required".into()));
        }
        if self.budget < self.strategies.len() {
            return Err(Error::InvalidConfig(format!(
                "budget {} is below the minimum of one candidate per strategy ({})",
                self.budget,
                self.strategies.len()
            )));
        }
        self.baseline.logistic.validate()?;
        self.baseline.tree.validate()?;
        for s in &self.strategies {
            match s {
                Strategy::Hyperparams { grid } => {
                    for hp in grid {
                        match (hp, self.baseline.learner) {
                            (Hyperparams::Logistic(h), BaselineLearner::Logistic) => h.validate()?,
                            (Hyperparams::Tree(h), BaselineLearner::Tree) => h.validate()?,
                            _ => {
                                return Err(Error::InvalidConfig(
                                    "hyperparameter grid entries must match the baseline learner".into(),
                                ))
                            }
                        }
                    }
                }
                Strategy::Lambda { values } | Strategy::Alpha { values } => {
                    if values.is_empty() {
                        return Err(Error::InvalidConfig(format!("{} grid is empty", s.name())));
                    }
                    for &v in values {
                        non_negative(s.name(), v)?;
                    }
                }
                Strategy::DropOne | Strategy::AddOne => {}
            }
        }
        Ok(())
    }
}

/// A candidate that could not be trained or evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCandidate {
    pub strategy: StrategyTag,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Successful candidates in strategy order, then enumeration order.
    pub candidates: Vec<CandidateModel>,
    pub failures: Vec<FailedCandidate>,
}

#[derive(Debug, Clone)]
enum Job {
    Fit {
        tag: StrategyTag,
        features: Vec<String>,
        hyperparams: Hyperparams,
    },
    Lambda(f64),
    Alpha(f64),
}

impl Job {
    fn tag(&self) -> StrategyTag {
        match self {
            Job::Fit { tag, .. } => tag.clone(),
            Job::Lambda(v) => StrategyTag::Lambda(*v),
            Job::Alpha(v) => StrategyTag::Alpha(*v),
        }
    }
}

fn describe(hp: &Hyperparams) -> String {
    match hp {
        Hyperparams::Logistic(h) => format!(
            "learning_rate={},epochs={},l2_penalty={}",
            h.learning_rate, h.epochs, h.l2_penalty
        ),
        Hyperparams::Tree(h) => format!(
            "max_depth={},min_leaf_size={},cutoff_grid_size={}",
            h.max_depth, h.min_leaf_size, h.cutoff_grid_size
        ),
    }
}

fn neighbourhood(hp: &Hyperparams) -> Vec<Hyperparams> {
    match hp {
        Hyperparams::Logistic(h) => [0.01, 0.1]
            .into_iter()
            .filter(|&l2| l2 != h.l2_penalty)
            .map(|l2| {
                Hyperparams::Logistic(LogisticHyperparams {
                    l2_penalty: l2,
                    ..h.clone()
                })
            })
            .collect(),
        Hyperparams::Tree(h) => {
            let mut out = Vec::new();
            if h.max_depth > 1 {
                out.push(TreeHyperparams {
                    max_depth: h.max_depth - 1,
                    ..h.clone()
                });
            }
            out.push(TreeHyperparams {
                max_depth: h.max_depth + 1,
                ..h.clone()
            });
            out.push(TreeHyperparams {
                min_leaf_size: h.min_leaf_size * 2,
                ..h.clone()
            });
            out.into_iter().map(Hyperparams::Tree).collect()
        }
    }
}

fn enumerate(strategy: &Strategy, features: &[String], available: &[String], hp: &Hyperparams) -> Vec<Job> {
    match strategy {
        Strategy::DropOne => features
            .iter()
            .map(|f| Job::Fit {
                tag: StrategyTag::Drop(f.clone()),
                features: features.iter().filter(|g| *g != f).cloned().collect(),
                hyperparams: hp.clone(),
            })
            .collect(),
        Strategy::AddOne => available
            .iter()
            .filter(|f| !features.contains(f))
            .map(|f| {
                let mut with = features.to_vec();
                with.push(f.clone());
                Job::Fit {
                    tag: StrategyTag::Add(f.clone()),
                    features: with,
                    hyperparams: hp.clone(),
                }
            })
            .collect(),
        Strategy::Hyperparams { grid } => {
            let grid = if grid.is_empty() { neighbourhood(hp) } else { grid.clone() };
            grid.into_iter()
                .map(|h| Job::Fit {
                    tag: StrategyTag::Hyperparam(describe(&h)),
                    features: features.to_vec(),
                    hyperparams: h,
                })
                .collect()
        }
        Strategy::Lambda { values } => values.iter().map(|&v| Job::Lambda(v)).collect(),
        Strategy::Alpha { values } => values.iter().map(|&v| Job::Alpha(v)).collect(),
    }
}

/// Splits `budget` across strategies round-robin, then keeps each
/// strategy's first jobs in order.
fn allocate(per_strategy: Vec<Vec<Job>>, budget: usize) -> Vec<Job> {
    let mut quota = vec![0usize; per_strategy.len()];
    let mut left = budget;
    while left > 0 {
        let mut progressed = false;
        for (q, jobs) in quota.iter_mut().zip(&per_strategy) {
            if left > 0 && *q < jobs.len() {
                *q += 1;
                left -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    per_strategy
        .into_iter()
        .zip(quota)
        .flat_map(|(jobs, q)| jobs.into_iter().take(q))
        .collect()
}

fn fit_with(train: &LabeledData, features: &[String], hp: &Hyperparams) -> Result<Model> {
    let data = train.data.select_features(features)?;
    match hp {
        Hyperparams::Logistic(h) => fit_logistic(&data, h),
        Hyperparams::Tree(h) => fit_tree(&data, h),
    }
}

/// Trains the baseline on `train` and scores it on `test`.
pub fn fit_baseline(train: &LabeledData, test: &LabeledData, config: &SearchConfig) -> Result<CandidateModel> {
    let features = config
        .baseline
        .features
        .clone()
        .unwrap_or_else(|| train.data.feature_names().to_vec());
    let model = fit_with(train, &features, &config.baseline.hyperparams())?;
    CandidateModel::evaluate(StrategyTag::Baseline, model, test, config.threshold, config.n_bins)
}

fn run_job(job: &Job, base_features: &[String], train: &LabeledData, config: &SearchConfig) -> Result<Model> {
    match job {
        Job::Fit {
            features, hyperparams, ..
        } => fit_with(train, features, hyperparams),
        Job::Lambda(lambda) => {
            let data = train.data.select_features(base_features)?;
            let reg = RegularizationConfig {
                lambda: *lambda,
                decision_threshold: config.threshold,
            };
            fit_fair_tree(&data, &train.groups, &reg, &config.baseline.tree)
        }
        Job::Alpha(alpha) => {
            let data = train.data.select_features(base_features)?;
            fit_adversarial(
                &data,
                &train.groups,
                &AdversarialConfig::matching(&config.baseline.logistic, *alpha),
            )
        }
    }
}

/// Trains every alternative on `train` and scores it on `test` with the
/// baseline's threshold. Jobs run in parallel; results keep strategy order,
/// then enumeration order. A candidate that fails is recorded, not fatal.
pub fn search_alternatives(
    baseline: &CandidateModel,
    train: &LabeledData,
    test: &LabeledData,
    config: &SearchConfig,
) -> Result<SearchOutcome> {
    config.validate()?;
    let features = &baseline.model.feature_subset;
    let hp = &baseline.model.training.hyperparams;
    let per_strategy = config
        .strategies
        .iter()
        .map(|s| enumerate(s, features, train.data.feature_names(), hp))
        .collect();
    let jobs = allocate(per_strategy, config.budget);

    let results: Vec<(StrategyTag, Result<CandidateModel>)> = jobs
        .par_iter()
        .map(|job| {
            let tag = job.tag();
            let outcome = run_job(job, features, train, config)
                .and_then(|m| CandidateModel::evaluate(tag.clone(), m, test, config.threshold, config.n_bins));
            (tag, outcome)
        })
        .collect();

    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for (tag, outcome) in results {
        match outcome {
            Ok(c) => candidates.push(c),
            Err(e) => failures.push(FailedCandidate {
                strategy: tag,
                error: e.to_string(),
            }),
        }
    }
    Ok(SearchOutcome { candidates, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jobs(n: usize, f: fn(usize) -> Job) -> Vec<Job> {
        (0..n).map(f).collect()
    }

    fn tags(jobs: &[Job]) -> Vec<String> {
        jobs.iter().map(|j| j.tag().to_string()).collect()
    }

    #[test]
    fn budget_is_shared_round_robin() {
        let per = vec![
            jobs(4, |i| Job::Lambda(i as f64)),
            jobs(1, |i| Job::Alpha(i as f64)),
            jobs(3, |i| Job::Alpha(10.0 + i as f64)),
        ];
        let picked = allocate(per, 5);
        assert_eq!(tags(&picked), ["lambda:0", "lambda:1", "alpha:0", "alpha:10", "alpha:11"]);
    }

    #[test]
    fn budget_larger_than_jobs_takes_everything() {
        let per = vec![jobs(2, |i| Job::Lambda(i as f64))];
        assert_eq!(allocate(per, 100).len(), 2);
    }

    #[test]
    fn validation_rules() {
        let ok = SearchConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SearchConfig { budget: 0, ..ok.clone() }.validate().is_err());
        assert!(SearchConfig { budget: 4, ..ok.clone() }.validate().is_err());
        assert!(SearchConfig {
            strategies: vec![],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            strategies: vec![Strategy::Lambda { values: vec![] }],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig {
            strategies: vec![Strategy::Hyperparams {
                grid: vec![Hyperparams::Tree(TreeHyperparams::default())]
            }],
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(SearchConfig { threshold: 1.5, ..ok }.validate().is_err());
    }

    #[test]
    fn strategy_json_shape() {
        let s: Vec<Strategy> =
            serde_json::from_str(r#"[{"kind":"drop_one"},{"kind":"lambda","values":[0,0.5]}]"#).unwrap();
        assert_eq!(
            s,
            vec![
                Strategy::DropOne,
                Strategy::Lambda {
                    values: vec![0.0, 0.5]
                }
            ]
        );
    }

    #[test]
    fn neighbourhood_skips_current_setting() {
        let hp = Hyperparams::Logistic(LogisticHyperparams {
            l2_penalty: 0.1,
            ..Default::default()
        });
        let n = neighbourhood(&hp);
        assert_eq!(n.len(), 1);
        assert_eq!(describe(&n[0]), "learning_rate=0.5,epochs=500,l2_penalty=0.01");
    }
}
