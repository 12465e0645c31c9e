//! Burden-shifting review of a baseline model: adverse impact, business
//! need, and the search for a less discriminatory alternative (LDA).

mod diagnostics;
mod report;
mod search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::LabeledData;
use crate::error::{Error, Result};
use crate::learners::Model;
use crate::metrics::FairnessReport;

pub use diagnostics::{proxy_diagnostics, ProxyDiagnostic, PERMUTATION_ROUNDS};
pub use report::{
    run_burden_shifting, BurdenShiftingReport, CandidateSummary, Prong2, Prong3, SelectedCandidate, Verdict,
    REPORT_SCHEMA_VERSION,
};
pub use search::{
    fit_baseline, search_alternatives, BaselineLearner, BaselineSpec, FailedCandidate, SearchConfig, SearchOutcome,
    Strategy,
};

/// Where a candidate came from. Serialized as `baseline`, `drop:<feature>`,
/// `add:<feature>`, `hyperparam:<description>`, `lambda:<value>` or
/// `alpha:<value>`.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyTag {
    Baseline,
    Drop(String),
    Add(String),
    Hyperparam(String),
    Lambda(f64),
    Alpha(f64),
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyTag::Baseline => write!(f, "baseline"),
            StrategyTag::Drop(name) => write!(f, "drop:{name}"),
            StrategyTag::Add(name) => write!(f, "add:{name}"),
            StrategyTag::Hyperparam(desc) => write!(f, "hyperparam:{desc}"),
            StrategyTag::Lambda(v) => write!(f, "lambda:{v}"),
            StrategyTag::Alpha(v) => write!(f, "alpha:{v}"),
        }
    }
}

impl FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "baseline" {
            return Ok(StrategyTag::Baseline);
        }
        let bad = || Error::InvalidConfig(format!("unrecognized strategy tag `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let number = || rest.parse::<f64>().map_err(|_| bad());
        Ok(match kind {
            "drop" => StrategyTag::Drop(rest.to_string()),
            "add" => StrategyTag::Add(rest.to_string()),
            "hyperparam" => StrategyTag::Hyperparam(rest.to_string()),
            "lambda" => StrategyTag::Lambda(number()?),
            "alpha" => StrategyTag::Alpha(number()?),
            _ => return Err(bad()),
        })
    }
}

impl Serialize for StrategyTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategyTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A trained variant scored on the evaluation split.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateModel {
    pub tag: StrategyTag,
    pub model: Model,
    /// Holdout accuracy at the evaluation threshold.
    pub predictiveness: f64,
    pub air: Option<f64>,
    pub report: FairnessReport,
}

impl CandidateModel {
    pub fn evaluate(tag: StrategyTag, model: Model, test: &LabeledData, threshold: f64, n_bins: usize) -> Result<Self> {
        let scores = model.predict(&test.data)?;
        let report = FairnessReport::evaluate(&scores, test.data.outcome(), &test.groups, threshold, n_bins)?;
        Ok(CandidateModel {
            tag,
            model,
            predictiveness: report.accuracy,
            air: report.air,
            report,
        })
    }
}

/// Outcome of the adverse-impact check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prong1 {
    pub adverse_impact_found: bool,
    pub air: Option<f64>,
    pub threshold: f64,
    /// Set when the control group received no approvals; counted as impact.
    pub air_undefined: bool,
}

/// Impact is found when AIR is strictly below `air_threshold`, or undefined.
pub fn prong1_adverse_impact(report: &FairnessReport, air_threshold: f64) -> Prong1 {
    Prong1 {
        adverse_impact_found: report.air.is_none_or(|a| a < air_threshold),
        air: report.air,
        threshold: air_threshold,
        air_undefined: report.air.is_none(),
    }
}

pub fn prong2_business_need(predictiveness: f64, floor: f64) -> bool {
    predictiveness >= floor
}

/// Default predictiveness floor: majority-class rate plus `margin`.
pub fn default_floor(majority_rate: f64, margin: f64) -> f64 {
    majority_rate + margin
}

/// Indices of the points not strictly dominated in `(predictiveness, air)`,
/// both maximized, ordered by descending predictiveness with input order
/// kept among ties.
pub fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[b].0.total_cmp(&points[a].0));
    let mut keep = Vec::new();
    let mut best_above = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let p = points[order[start]].0;
        let end = start + order[start..].iter().take_while(|&&i| points[i].0 == p).count();
        let group = &order[start..end];
        let top = group.iter().map(|&i| points[i].1).fold(f64::NEG_INFINITY, f64::max);
        if top > best_above {
            keep.extend(group.iter().copied().filter(|&i| points[i].1 == top));
            best_above = top;
        }
        start = end;
    }
    keep
}

/// Nondominated candidates; those with undefined AIR are left out.
pub fn pareto_frontier(candidates: &[CandidateModel]) -> Vec<CandidateModel> {
    let defined: Vec<&CandidateModel> = candidates.iter().filter(|c| c.air.is_some()).collect();
    let points: Vec<(f64, f64)> = defined.iter().map(|c| (c.predictiveness, c.air.unwrap())).collect();
    pareto_indices(&points).into_iter().map(|i| defined[i].clone()).collect()
}

/// Whether `candidate` qualifies as an LDA relative to `baseline`.
/// An undefined baseline AIR is treated as 0.
pub fn is_lda(candidate: &CandidateModel, baseline: &CandidateModel, epsilon: f64, min_air_gain: f64) -> bool {
    let base_air = baseline.air.unwrap_or(0.0);
    match candidate.air {
        Some(air) => {
            candidate.tag != StrategyTag::Baseline
                && candidate.predictiveness >= baseline.predictiveness - epsilon
                && air > base_air
                && air >= base_air + min_air_gain
        }
        None => false,
    }
}

/// Highest-AIR frontier member meeting the LDA constraints; ties go to
/// higher predictiveness, then to the earlier candidate.
pub fn prong3_select(
    frontier: &[CandidateModel],
    baseline: &CandidateModel,
    epsilon: f64,
    min_air_gain: f64,
) -> Option<CandidateModel> {
    let mut best: Option<&CandidateModel> = None;
    for c in frontier.iter().filter(|c| is_lda(c, baseline, epsilon, min_air_gain)) {
        let better = match best {
            None => true,
            Some(b) => {
                let (ca, ba) = (c.air.unwrap(), b.air.unwrap());
                ca > ba || (ca == ba && c.predictiveness > b.predictiveness)
            }
        };
        if better {
            best = Some(c);
        }
    }
    best.cloned()
}
