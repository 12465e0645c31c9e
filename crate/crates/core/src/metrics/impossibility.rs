//! The three risk-score fairness conditions (strict calibration within
//! groups, balance for the negative class, balance for the positive class)
//! and an exhaustive search for score assignments satisfying all of them.
//!
//! Scores in the search are functions of what a model can observe: the group
//! and an opaque feature-cell id per row. They may not depend on the outcome
//! itself. With that restriction all three conditions hold together only
//! when the groups have equal base rates or when every (group, cell) is pure
//! in outcome (perfect prediction).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_len, RiskScores};
use crate::data::{Group, GroupLabels};
use crate::error::{Error, Result};

pub const MAX_SEARCH_ROWS: usize = 40;
pub const MAX_GRID_STEPS: usize = 100;
/// Upper bound on `(steps + 1)^(number of group x cell pairs)`.
pub const MAX_SEARCH_ASSIGNMENTS: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeConditions {
    pub calibrated_strict: bool,
    pub balance_negative: bool,
    pub balance_positive: bool,
}

impl ThreeConditions {
    pub fn all(&self) -> bool {
        self.calibrated_strict && self.balance_negative && self.balance_positive
    }
}

/// Rows sharing a group and a score value, with their outcome counts.
#[derive(Debug, Clone, Copy)]
struct ScoreCell {
    group: Group,
    score: f64,
    non_defaults: usize,
    defaults: usize,
}

fn evaluate(cells: &mut [ScoreCell], tol: f64) -> ThreeConditions {
    cells.sort_by(|a, b| a.group.cmp(&b.group).then(a.score.total_cmp(&b.score)));

    // strict calibration: within a group, rows at score v default at rate v
    let mut calibrated = true;
    let mut i = 0;
    while i < cells.len() {
        let (g, v) = (cells[i].group, cells[i].score);
        let (mut n0, mut n1) = (0usize, 0usize);
        while i < cells.len() && cells[i].group == g && cells[i].score == v {
            n0 += cells[i].non_defaults;
            n1 += cells[i].defaults;
            i += 1;
        }
        let rate = n1 as f64 / (n0 + n1) as f64;
        if (rate - v).abs() > tol {
            calibrated = false;
            break;
        }
    }

    // per group: (score sum, count) among non-defaulters and defaulters
    let mut sums = [[(0.0f64, 0usize); 2]; 2];
    for c in cells.iter() {
        let gs = &mut sums[(c.group == Group::Control) as usize];
        gs[0].0 += c.score * c.non_defaults as f64;
        gs[0].1 += c.non_defaults;
        gs[1].0 += c.score * c.defaults as f64;
        gs[1].1 += c.defaults;
    }
    // a group with no members of the class cannot violate balance for it
    let balanced = |class: usize| {
        let (p, c) = (sums[0][class], sums[1][class]);
        if p.1 == 0 || c.1 == 0 {
            return true;
        }
        (p.0 / p.1 as f64 - c.0 / c.1 as f64).abs() <= tol
    };

    ThreeConditions {
        calibrated_strict: calibrated,
        balance_negative: balanced(0),
        balance_positive: balanced(1),
    }
}

/// Checks the three conditions on per-row scores, each within `tol`.
///
/// Strict calibration compares, within each group, the observed default rate
/// among rows sharing a score value with that value. Balance conditions on a
/// class absent from a group hold vacuously.
pub fn check_three_conditions(
    scores: &RiskScores,
    outcomes: &[u8],
    groups: &GroupLabels,
    tol: f64,
) -> Result<ThreeConditions> {
    check_len(scores.len(), outcomes.len())?;
    check_len(scores.len(), groups.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be positive".into()));
    }
    let mut cells: Vec<ScoreCell> = scores
        .as_slice()
        .iter()
        .zip(outcomes)
        .zip(groups.as_slice())
        .map(|((&score, &y), &group)| ScoreCell {
            group,
            score,
            non_defaults: (y == 0) as usize,
            defaults: (y == 1) as usize,
        })
        .collect();
    Ok(evaluate(&mut cells, tol))
}

/// Exhaustive search over scores on the grid `{0, 1/q, ..., 1}` that are
/// constant on each (group, feature cell) pair.
///
/// Assignments are visited in lexicographic order of grid indices, pairs
/// ordered protected-first then by cell id, so the returned witness (the
/// first one found) is deterministic. Returns `None` when no assignment
/// satisfies all three conditions within `tol`.
pub fn impossibility_search(
    outcomes: &[u8],
    groups: &GroupLabels,
    feature_cells: &[usize],
    score_grid_steps: usize,
    tol: f64,
) -> Result<Option<RiskScores>> {
    check_len(outcomes.len(), groups.len())?;
    check_len(outcomes.len(), feature_cells.len())?;
    if outcomes.len() > MAX_SEARCH_ROWS {
        return Err(Error::InstanceTooLarge(format!(
            "{} rows exceeds the limit of {MAX_SEARCH_ROWS}",
            outcomes.len()
        )));
    }
    if score_grid_steps == 0 || score_grid_steps > MAX_GRID_STEPS {
        return Err(Error::InstanceTooLarge(format!(
            "score_grid_steps must lie in 1..={MAX_GRID_STEPS}, got {score_grid_steps}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tol must be positive".into()));
    }
    groups.require_both()?;

    let mut pairs: BTreeMap<(Group, usize), (usize, usize)> = BTreeMap::new();
    for ((&y, &g), &cell) in outcomes.iter().zip(groups.as_slice()).zip(feature_cells) {
        let e = pairs.entry((g, cell)).or_default();
        if y == 0 {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    let pairs: Vec<((Group, usize), (usize, usize))> = pairs.into_iter().collect();
    let k = pairs.len() as u32;
    let total = (score_grid_steps as u64 + 1).checked_pow(k);
    if total.is_none_or(|t| t > MAX_SEARCH_ASSIGNMENTS) {
        return Err(Error::InstanceTooLarge(format!(
            "{} (group, cell) pairs on a {score_grid_steps}-step grid exceeds \
             {MAX_SEARCH_ASSIGNMENTS} assignments",
            pairs.len()
        )));
    }

    let q = score_grid_steps as f64;
    let mut index = vec![0usize; pairs.len()];
    let mut cells: Vec<ScoreCell> = Vec::with_capacity(pairs.len());
    loop {
        cells.clear();
        cells.extend(pairs.iter().zip(&index).map(|(&((group, _), (n0, n1)), &i)| ScoreCell {
            group,
            score: i as f64 / q,
            non_defaults: n0,
            defaults: n1,
        }));
        if evaluate(&mut cells, tol).all() {
            let score_of = |g: Group, c: usize| {
                let j = pairs.iter().position(|p| p.0 == (g, c)).expect("pair present");
                index[j] as f64 / q
            };
            let scores = groups
                .as_slice()
                .iter()
                .zip(feature_cells)
                .map(|(&g, &c)| score_of(g, c))
                .collect();
            return RiskScores::new(scores).map(Some);
        }
        // odometer, last pair fastest
        let mut pos = index.len();
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            if index[pos] < score_grid_steps {
                index[pos] += 1;
                break;
            }
            index[pos] = 0;
        }
    }
}
