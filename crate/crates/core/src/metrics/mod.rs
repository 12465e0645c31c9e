//! Fairness and accuracy measures for risk scores and approve/deny decisions.
//!
//! Conventions used throughout:
//! - a score is the estimated probability of default;
//! - a decision is *favorable* (approval) iff `score < threshold`;
//! - the confusion matrix treats approval as the positive prediction, so a
//!   false positive is an approved applicant who defaults.

mod calibration;
mod impossibility;
mod report;

use serde::{Deserialize, Serialize};

use crate::data::{Group, GroupLabels};
use crate::error::{Error, Result};

pub use calibration::{calibration_within_groups, BinCell, CalibrationBin, CalibrationTable};
pub use impossibility::{
    check_three_conditions, impossibility_search, ThreeConditions, MAX_GRID_STEPS,
    MAX_SEARCH_ASSIGNMENTS, MAX_SEARCH_ROWS,
};
pub use report::{auc, FairnessReport, PerGroup};

/// Per-row default probabilities, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskScores(Vec<f64>);

impl RiskScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(row) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidScore {
                row,
                value: scores[row],
            });
        }
        Ok(RiskScores(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Approve/deny decisions derived from scores at a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decisions {
    favorable: Vec<bool>,
    threshold: f64,
}

impl Decisions {
    /// `favorable[i] = scores[i] < threshold`; ties are denials.
    pub fn from_scores(scores: &RiskScores, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(Decisions {
            favorable: scores.as_slice().iter().map(|&s| s < threshold).collect(),
            threshold,
        })
    }

    /// Decisions given directly; the threshold is recorded for reporting only.
    pub fn from_flags(favorable: Vec<bool>, threshold: f64) -> Self {
        Decisions {
            favorable,
            threshold,
        }
    }

    pub fn favorable(&self) -> &[bool] {
        &self.favorable
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.favorable.len()
    }

    pub fn is_empty(&self) -> bool {
        self.favorable.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    /// approved, did not default
    pub tp: usize,
    /// approved, defaulted
    pub fp: usize,
    /// denied, defaulted
    pub tn: usize,
    /// denied, did not default
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    fn add(&mut self, favorable: bool, outcome: u8) {
        match (favorable, outcome) {
            (true, 0) => self.tp += 1,
            (true, _) => self.fp += 1,
            (false, 0) => self.fn_ += 1,
            (false, _) => self.tn += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub protected: Confusion,
    pub control: Confusion,
}

impl GroupConfusion {
    pub fn get(&self, group: Group) -> &Confusion {
        match group {
            Group::Protected => &self.protected,
            Group::Control => &self.control,
        }
    }

    pub fn overall(&self) -> Confusion {
        Confusion {
            tp: self.protected.tp + self.control.tp,
            fp: self.protected.fp + self.control.fp,
            tn: self.protected.tn + self.control.tn,
            fn_: self.protected.fn_ + self.control.fn_,
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch { expected, found });
    }
    Ok(())
}

pub fn confusion(decisions: &Decisions, outcomes: &[u8], groups: &GroupLabels) -> Result<GroupConfusion> {
    check_len(decisions.len(), outcomes.len())?;
    check_len(decisions.len(), groups.len())?;
    let mut out = GroupConfusion::default();
    for ((&fav, &y), &g) in decisions.favorable().iter().zip(outcomes).zip(groups.as_slice()) {
        match g {
            Group::Protected => out.protected.add(fav, y),
            Group::Control => out.control.add(fav, y),
        }
    }
    Ok(out)
}

/// Share of a group's rows that receive a favorable decision.
pub fn favorable_rate(decisions: &Decisions, groups: &GroupLabels, group: Group) -> Result<f64> {
    check_len(decisions.len(), groups.len())?;
    let (mut fav, mut n) = (0usize, 0usize);
    for (&f, &g) in decisions.favorable().iter().zip(groups.as_slice()) {
        if g == group {
            n += 1;
            fav += f as usize;
        }
    }
    if n == 0 {
        return Err(Error::EmptyGroup(group));
    }
    Ok(fav as f64 / n as f64)
}

/// `favorable_rate(protected) / favorable_rate(control)`; 1.0 is parity.
pub fn adverse_impact_ratio(decisions: &Decisions, groups: &GroupLabels) -> Result<f64> {
    let protected = favorable_rate(decisions, groups, Group::Protected)?;
    let control = favorable_rate(decisions, groups, Group::Control)?;
    if control == 0.0 {
        return Err(Error::UndefinedAir);
    }
    Ok(protected / control)
}

/// Signed difference `favorable_rate(protected) - favorable_rate(control)`.
///
/// Denial rates are complements of approval rates, so the denial-rate gap is
/// the negation of this value.
pub fn statistical_parity(decisions: &Decisions, groups: &GroupLabels) -> Result<f64> {
    Ok(favorable_rate(decisions, groups, Group::Protected)?
        - favorable_rate(decisions, groups, Group::Control)?)
}

/// Mean score among rows of `group` whose outcome equals `class`.
pub(crate) fn class_mean(
    scores: &RiskScores,
    outcomes: &[u8],
    groups: &GroupLabels,
    group: Group,
    class: u8,
) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for ((&s, &y), &g) in scores.as_slice().iter().zip(outcomes).zip(groups.as_slice()) {
        if g == group && y == class {
            sum += s;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

fn balance_gap(scores: &RiskScores, outcomes: &[u8], groups: &GroupLabels, class: u8) -> Result<f64> {
    check_len(scores.len(), outcomes.len())?;
    check_len(scores.len(), groups.len())?;
    let mean = |g| {
        class_mean(scores, outcomes, groups, g, class).ok_or(Error::MissingOutcomeClass {
            group: g,
            outcome: class,
        })
    };
    Ok((mean(Group::Protected)? - mean(Group::Control)?).abs())
}

/// Gap in mean score between groups among non-defaulters (`y = 0`).
pub fn balance_negative(scores: &RiskScores, outcomes: &[u8], groups: &GroupLabels) -> Result<f64> {
    balance_gap(scores, outcomes, groups, 0)
}

/// Gap in mean score between groups among defaulters (`y = 1`).
pub fn balance_positive(scores: &RiskScores, outcomes: &[u8], groups: &GroupLabels) -> Result<f64> {
    balance_gap(scores, outcomes, groups, 1)
}
