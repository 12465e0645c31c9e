use serde::{Deserialize, Serialize};

use super::{
    adverse_impact_ratio, calibration_within_groups, check_len, class_mean, confusion, favorable_rate,
    statistical_parity, CalibrationTable, Decisions, GroupConfusion, RiskScores,
};
use crate::data::{Group, GroupLabels};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerGroup<T> {
    pub protected: T,
    pub control: T,
}

/// Every fairness and accuracy measure for one set of scores at one threshold.
///
/// Quantities that can be undefined on a given sample (AIR when the control
/// group gets no approvals, a balance gap when a group has no rows of that
/// outcome, AUC with a single class) are `None` rather than errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub n_rows: usize,
    pub threshold: f64,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub group_sizes: PerGroup<usize>,
    pub base_rates: PerGroup<f64>,
    pub favorable_rates: PerGroup<f64>,
    pub per_group_confusion: GroupConfusion,
    pub air: Option<f64>,
    pub statistical_parity_gap: f64,
    pub calibration: CalibrationTable,
    pub balance_negative_gap: Option<f64>,
    pub balance_positive_gap: Option<f64>,
}

impl FairnessReport {
    pub fn evaluate(
        scores: &RiskScores,
        outcomes: &[u8],
        groups: &GroupLabels,
        threshold: f64,
        n_bins: usize,
    ) -> Result<Self> {
        check_len(scores.len(), outcomes.len())?;
        check_len(scores.len(), groups.len())?;
        groups.require_both()?;
        let decisions = Decisions::from_scores(scores, threshold)?;
        let conf = confusion(&decisions, outcomes, groups)?;
        let air = match adverse_impact_ratio(&decisions, groups) {
            Ok(a) => Some(a),
            Err(Error::UndefinedAir) => None,
            Err(e) => return Err(e),
        };
        let base_rate = |g: Group| {
            let c = conf.get(g);
            (c.fp + c.tn) as f64 / c.total() as f64
        };
        let gap = |class: u8| {
            match (
                class_mean(scores, outcomes, groups, Group::Protected, class),
                class_mean(scores, outcomes, groups, Group::Control, class),
            ) {
                (Some(p), Some(c)) => Some((p - c).abs()),
                _ => None,
            }
        };
        Ok(FairnessReport {
            n_rows: scores.len(),
            threshold,
            accuracy: conf.overall().correct() as f64 / scores.len() as f64,
            auc: auc(scores, outcomes),
            group_sizes: PerGroup {
                protected: conf.protected.total(),
                control: conf.control.total(),
            },
            base_rates: PerGroup {
                protected: base_rate(Group::Protected),
                control: base_rate(Group::Control),
            },
            favorable_rates: PerGroup {
                protected: favorable_rate(&decisions, groups, Group::Protected)?,
                control: favorable_rate(&decisions, groups, Group::Control)?,
            },
            per_group_confusion: conf,
            air,
            statistical_parity_gap: statistical_parity(&decisions, groups)?,
            calibration: calibration_within_groups(scores, outcomes, groups, n_bins)?,
            balance_negative_gap: gap(0),
            balance_positive_gap: gap(1),
        })
    }

    /// Share of rows in the more common outcome class.
    pub fn majority_rate(&self) -> f64 {
        let overall = self.per_group_confusion.overall();
        let defaults = overall.fp + overall.tn;
        defaults.max(self.n_rows - defaults) as f64 / self.n_rows as f64
    }
}

/// Probability that a random defaulter outscores a random non-defaulter
/// (ties count one half). `None` with a single outcome class.
pub fn auc(scores: &RiskScores, outcomes: &[u8]) -> Option<f64> {
    let s = scores.as_slice();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let n1 = outcomes.iter().filter(|&&y| y == 1).count();
    let n0 = outcomes.len() - n1;
    if n0 == 0 || n1 == 0 {
        return None;
    }
    // midranks over tied blocks
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && s[order[j + 1]] == s[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &r in &order[i..=j] {
            if outcomes[r] == 1 {
                rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;
    Some(u / (n0 * n1) as f64)
}
