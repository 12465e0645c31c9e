//! Naive reference implementations used as oracles by the integration and
//! acceptance tests. Written for clarity, independently of the library code.

#![allow(dead_code)]

use std::path::PathBuf;

use fairscope_core::data::{load_csv, Dataset, Group, GroupLabels, LoadOptions};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

/// The three-level credit-score example: 100 applicants, cutoffs 600 and 700.
pub fn cutoff_fixture() -> (Dataset, GroupLabels) {
    let opts = LoadOptions::new("default")
        .group_column("group")
        .id_column("applicant_id");
    let (ds, groups) = load_csv(fixture("credit_score_cutoffs.csv"), &opts).expect("fixture loads");
    (ds, groups.expect("fixture has groups"))
}

pub fn german_fixture() -> (Dataset, GroupLabels) {
    let opts = LoadOptions::new("default")
        .group_column("group")
        .id_column("applicant_id");
    let (ds, groups) = load_csv(fixture("german_style_200.csv"), &opts).expect("fixture loads");
    (ds, groups.expect("fixture has groups"))
}

fn is_protected(g: Group) -> bool {
    matches!(g, Group::Protected)
}

/// Approval iff score < threshold.
pub fn approvals(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s < threshold).collect()
}

/// Per group `[tp, fp, tn, fn]` with approval as the positive prediction and
/// non-default as the positive truth: tp = approved non-defaulter, fp =
/// approved defaulter, tn = denied defaulter, fn = denied non-defaulter.
/// Index 0 is protected, 1 is control.
pub fn confusion(approved: &[bool], y: &[u8], g: &[Group]) -> [[usize; 4]; 2] {
    let mut out = [[0usize; 4]; 2];
    for i in 0..y.len() {
        let k = if is_protected(g[i]) { 0 } else { 1 };
        let slot = match (approved[i], y[i]) {
            (true, 0) => 0,
            (true, _) => 1,
            (false, 1) => 2,
            (false, _) => 3,
        };
        out[k][slot] += 1;
    }
    out
}

pub fn approval_rate(approved: &[bool], g: &[Group], protected: bool) -> f64 {
    let mut n = 0.0;
    let mut a = 0.0;
    for i in 0..g.len() {
        if is_protected(g[i]) == protected {
            n += 1.0;
            if approved[i] {
                a += 1.0;
            }
        }
    }
    a / n
}

pub fn air(approved: &[bool], g: &[Group]) -> Option<f64> {
    let c = approval_rate(approved, g, false);
    if c == 0.0 {
        None
    } else {
        Some(approval_rate(approved, g, true) / c)
    }
}

pub fn parity(approved: &[bool], g: &[Group]) -> f64 {
    approval_rate(approved, g, true) - approval_rate(approved, g, false)
}

fn class_mean(scores: &[f64], y: &[u8], g: &[Group], protected: bool, class: u8) -> Option<f64> {
    let picked: Vec<f64> = (0..y.len())
        .filter(|&i| is_protected(g[i]) == protected && y[i] == class)
        .map(|i| scores[i])
        .collect();
    if picked.is_empty() {
        None
    } else {
        Some(picked.iter().sum::<f64>() / picked.len() as f64)
    }
}

/// `|mean score protected - mean score control|` among rows of `class`.
pub fn balance_gap(scores: &[f64], y: &[u8], g: &[Group], class: u8) -> Option<f64> {
    Some((class_mean(scores, y, g, true, class)? - class_mean(scores, y, g, false, class)?).abs())
}

/// Per bin `(protected count, protected defaults, control count, control
/// defaults)` over equal-width bins `[i/n, (i+1)/n)`, the last bin closed.
pub fn calibration_counts(scores: &[f64], y: &[u8], g: &[Group], n_bins: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = vec![(0, 0, 0, 0); n_bins];
    for i in 0..y.len() {
        let mut b = 0;
        while b + 1 < n_bins && scores[i] >= (b + 1) as f64 / n_bins as f64 {
            b += 1;
        }
        let d = y[i] as usize;
        if is_protected(g[i]) {
            out[b].0 += 1;
            out[b].1 += d;
        } else {
            out[b].2 += 1;
            out[b].3 += d;
        }
    }
    out
}

/// Largest `|rate_p - rate_c|` over bins where both groups have rows.
pub fn calibration_max_gap(counts: &[(usize, usize, usize, usize)]) -> Option<f64> {
    counts
        .iter()
        .filter(|c| c.0 > 0 && c.2 > 0)
        .map(|c| (c.1 as f64 / c.0 as f64 - c.3 as f64 / c.2 as f64).abs())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

/// Strict calibration within each group plus balance for both classes.
/// Balance on a class missing from a group holds vacuously.
pub fn three_conditions_hold(scores: &[f64], y: &[u8], g: &[Group], tol: f64) -> bool {
    for protected in [true, false] {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| is_protected(g[i]) == protected).collect();
        for &i in &rows {
            let same: Vec<usize> = rows.iter().copied().filter(|&j| scores[j] == scores[i]).collect();
            let rate = same.iter().map(|&j| y[j] as f64).sum::<f64>() / same.len() as f64;
            if (rate - scores[i]).abs() > tol {
                return false;
            }
        }
    }
    for class in [0, 1] {
        if let Some(gap) = balance_gap(scores, y, g, class) {
            if gap > tol {
                return false;
            }
        }
    }
    true
}

/// Mean log-loss plus `l2/2 * |w|^2` on already standardized columns.
pub fn log_loss(columns: &[Vec<f64>], y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    for i in 0..n {
        let z: f64 = b + columns.iter().zip(w).map(|(c, wj)| c[i] * wj).sum::<f64>();
        let p = 1.0 / (1.0 + (-z).exp());
        total -= y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln();
    }
    total / n as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Brute-force nondominated set: indices not strictly dominated by any
/// other point, both coordinates maximized.
pub fn nondominated(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !(0..points.len()).any(|j| {
                points[j].0 >= points[i].0
                    && points[j].1 >= points[i].1
                    && (points[j].0 > points[i].0 || points[j].1 > points[i].1)
            })
        })
        .collect()
}
