use serde::{Deserialize, Serialize};

use super::{check_len, RiskScores};
use crate::data::{Group, GroupLabels};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BinCell {
    pub count: usize,
    pub defaults: usize,
    /// Observed default rate; `None` for an empty cell.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub protected: BinCell,
    pub control: BinCell,
    /// `|rate(protected) - rate(control)|` when both groups are present.
    pub gap: Option<f64>,
    /// Bin holds rows from only one group, so it cannot be compared.
    pub flagged: bool,
}

/// Cross-group calibration: observed default rates per group within
/// equal-width score bins over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub n_bins: usize,
    pub bins: Vec<CalibrationBin>,
    /// Largest gap over bins where both groups are present.
    pub max_gap: Option<f64>,
}

impl CalibrationTable {
    pub fn is_calibrated(&self, tol: f64) -> bool {
        self.max_gap.is_none_or(|g| g <= tol)
    }

    /// CSV with one row per bin.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(
            "bin,lower,upper,protected_count,protected_defaults,protected_rate,\
             control_count,control_defaults,control_rate,gap,flagged\n",
        );
        for (i, b) in self.bins.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{},{},{},{},{},{},{}\n",
                b.lower,
                b.upper,
                b.protected.count,
                b.protected.defaults,
                opt(b.protected.rate),
                b.control.count,
                b.control.defaults,
                opt(b.control.rate),
                opt(b.gap),
                b.flagged
            ));
        }
        out
    }
}

pub(crate) fn bin_index(score: f64, n_bins: usize) -> usize {
    ((score * n_bins as f64).floor() as usize).min(n_bins - 1)
}

pub fn calibration_within_groups(
    scores: &RiskScores,
    outcomes: &[u8],
    groups: &GroupLabels,
    n_bins: usize,
) -> Result<CalibrationTable> {
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be at least 1".into()));
    }
    check_len(scores.len(), outcomes.len())?;
    check_len(scores.len(), groups.len())?;

    let mut cells = vec![[BinCell::default(); 2]; n_bins];
    for ((&s, &y), &g) in scores.as_slice().iter().zip(outcomes).zip(groups.as_slice()) {
        let cell = &mut cells[bin_index(s, n_bins)][(g == Group::Control) as usize];
        cell.count += 1;
        cell.defaults += y as usize;
    }

    let mut max_gap: Option<f64> = None;
    let bins = cells
        .into_iter()
        .enumerate()
        .map(|(i, [mut p, mut c])| {
            for cell in [&mut p, &mut c] {
                cell.rate = (cell.count > 0).then(|| cell.defaults as f64 / cell.count as f64);
            }
            let gap = match (p.rate, c.rate) {
                (Some(a), Some(b)) => Some((a - b).abs()),
                _ => None,
            };
            if let Some(g) = gap {
                max_gap = Some(max_gap.map_or(g, |m: f64| m.max(g)));
            }
            CalibrationBin {
                lower: i as f64 / n_bins as f64,
                upper: (i + 1) as f64 / n_bins as f64,
                protected: p,
                control: c,
                gap,
                flagged: gap.is_none() && (p.count + c.count) > 0,
            }
        })
        .collect();

    Ok(CalibrationTable {
        n_bins,
        bins,
        max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Group::{Control as C, Protected as P};

    #[test]
    fn same_score_different_observed_rates_is_miscalibrated() {
        // 20 protected at 0.20 with 3 defaults (15%), 20 control at 0.20 with 5 defaults (25%)
        let mut groups = vec![P; 20];
        groups.extend(vec![C; 20]);
        let mut y = vec![0u8; 40];
        y[..3].fill(1);
        y[20..25].fill(1);
        let s = RiskScores::new(vec![0.2; 40]).unwrap();
        let t = calibration_within_groups(&s, &y, &GroupLabels::new(groups), 10).unwrap();
        assert!((t.max_gap.unwrap() - 0.10).abs() < 1e-12);
        assert!(!t.is_calibrated(0.01));
        assert_eq!(t.bins[2].protected.count, 20);
    }

    #[test]
    fn equal_observed_rates_are_calibrated() {
        let mut groups = vec![P; 10];
        groups.extend(vec![C; 10]);
        let mut y = vec![0u8; 20];
        y[..2].fill(1);
        y[10..12].fill(1);
        let s = RiskScores::new(vec![0.2; 20]).unwrap();
        let t = calibration_within_groups(&s, &y, &GroupLabels::new(groups), 10).unwrap();
        assert_eq!(t.max_gap, Some(0.0));
        assert!(t.is_calibrated(1e-12));
    }

    #[test]
    fn single_group_bins_are_flagged_and_excluded() {
        let g = GroupLabels::new(vec![P, C, P]);
        let s = RiskScores::new(vec![0.05, 0.05, 0.95]).unwrap();
        let t = calibration_within_groups(&s, &[0, 1, 1], &g, 2).unwrap();
        assert_eq!(t.max_gap, Some(1.0));
        assert!(t.bins[1].flagged);
        assert!(t.bins[1].gap.is_none());
        assert!(!t.bins[0].flagged);
    }

    #[test]
    fn score_of_one_lands_in_last_bin() {
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.35, 10), 3);
    }

    #[test]
    fn zero_bins_rejected() {
        let g = GroupLabels::new(vec![P]);
        let s = RiskScores::new(vec![0.5]).unwrap();
        assert!(calibration_within_groups(&s, &[0], &g, 0).is_err());
    }
}
