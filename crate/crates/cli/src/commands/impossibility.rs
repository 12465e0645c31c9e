use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use fairscope_core::data::{Group, GroupLabels};
use fairscope_core::metrics::{
    check_three_conditions, impossibility_search, MAX_GRID_STEPS, MAX_SEARCH_ASSIGNMENTS, MAX_SEARCH_ROWS,
};
use serde::Serialize;

use crate::config::{Layout, RunConfig};
use crate::output::{ensure_dir, write_file, write_json, SCHEMA_VERSION};
use crate::Status;

#[derive(Debug, Serialize)]
struct FeasibilityRow {
    layout: Layout,
    protected_defaults: usize,
    control_defaults: usize,
    protected_base_rate: f64,
    control_base_rate: f64,
    equal_base_rates: bool,
    perfect_prediction: bool,
    /// The common base rate is a multiple of 1/q.
    rate_on_grid: bool,
    /// `None` when the base rates are equal but the common rate is off the
    /// grid: the constant score is unavailable and other witnesses may or
    /// may not exist.
    expected_witness: Option<bool>,
    witness_found: bool,
    /// The witness was re-checked against the three conditions.
    witness_verified: Option<bool>,
    matches: bool,
    witness: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
struct ImpossibilityReport {
    schema_version: u32,
    command: &'static str,
    group_sizes: [usize; 2],
    cells_per_group: usize,
    grid_steps: usize,
    tolerance: f64,
    n_instances: usize,
    n_witnesses: usize,
    all_match: bool,
    rows: Vec<FeasibilityRow>,
}

/// Feature cells for one group of `n` rows whose first `d` rows default.
fn cells_for(layout: Layout, n: usize, d: usize, k: usize) -> Vec<usize> {
    (0..n)
        .map(|i| match layout {
            Layout::Pure => (i >= d) as usize,
            Layout::Mixed => i % k,
        })
        .collect()
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let [np, nc] = cfg.group_sizes;
    if np == 0 || nc == 0 {
        bail!("group_sizes must both be at least 1");
    }
    if np + nc > MAX_SEARCH_ROWS {
        bail!("instance too large: {} rows exceeds the limit of {MAX_SEARCH_ROWS}", np + nc);
    }
    if cfg.grid_steps == 0 || cfg.grid_steps > MAX_GRID_STEPS {
        bail!("instance too large: grid_steps must lie in 1..={MAX_GRID_STEPS}, got {}", cfg.grid_steps);
    }
    if cfg.cells_per_group == 0 {
        bail!("cells_per_group must be at least 1");
    }
    if !(cfg.tolerance > 0.0 && cfg.tolerance.is_finite()) {
        bail!("tolerance must be positive");
    }
    if cfg.layouts.is_empty() {
        bail!("layouts must not be empty");
    }
    // worst case over the family: the widest layout in both groups
    let per_group = cfg
        .layouts
        .iter()
        .map(|l| match l {
            Layout::Pure => 2,
            Layout::Mixed => cfg.cells_per_group,
        })
        .max()
        .unwrap_or(1);
    let pairs = (per_group.min(np) + per_group.min(nc)) as u32;
    let total = (cfg.grid_steps as u64 + 1).checked_pow(pairs);
    if total.is_none_or(|t| t > MAX_SEARCH_ASSIGNMENTS) {
        bail!(
            "instance too large: {pairs} (group, cell) pairs on a {}-step grid exceeds {MAX_SEARCH_ASSIGNMENTS} assignments",
            cfg.grid_steps
        );
    }
    Ok(())
}

pub fn impossibility(cfg: &RunConfig, out: &Path) -> Result<Status> {
    validate(cfg)?;
    let [np, nc] = cfg.group_sizes;
    let k = cfg.cells_per_group;
    let q = cfg.grid_steps;

    let mut rows = Vec::new();
    for &layout in &cfg.layouts {
        for dp in 0..=np {
            for dc in 0..=nc {
                let mut outcomes = vec![0u8; np + nc];
                outcomes[..dp].fill(1);
                outcomes[np..np + dc].fill(1);
                let mut labels = vec![Group::Protected; np];
                labels.extend(std::iter::repeat_n(Group::Control, nc));
                let groups = GroupLabels::new(labels);
                let mut cells = cells_for(layout, np, dp, k);
                cells.extend(cells_for(layout, nc, dc, k));

                let pure = (0..outcomes.len()).all(|i| {
                    (0..outcomes.len())
                        .filter(|&j| groups.as_slice()[j] == groups.as_slice()[i] && cells[j] == cells[i])
                        .all(|j| outcomes[j] == outcomes[i])
                });
                let equal = dp * nc == dc * np;
                let on_grid = (dp * q).is_multiple_of(np);
                let expected = if pure || (equal && on_grid) {
                    Some(true)
                } else if equal {
                    None
                } else {
                    Some(false)
                };

                let witness = impossibility_search(&outcomes, &groups, &cells, q, cfg.tolerance)?;
                let verified = match &witness {
                    Some(w) => Some(check_three_conditions(w, &outcomes, &groups, cfg.tolerance)?.all()),
                    None => None,
                };
                let found = witness.is_some();
                rows.push(FeasibilityRow {
                    layout,
                    protected_defaults: dp,
                    control_defaults: dc,
                    protected_base_rate: dp as f64 / np as f64,
                    control_base_rate: dc as f64 / nc as f64,
                    equal_base_rates: equal,
                    perfect_prediction: pure,
                    rate_on_grid: equal && on_grid,
                    expected_witness: expected,
                    witness_found: found,
                    witness_verified: verified,
                    matches: expected.is_none_or(|e| e == found) && verified != Some(false),
                    witness: witness.map(|w| w.into_inner()),
                });
            }
        }
    }

    let report = ImpossibilityReport {
        schema_version: SCHEMA_VERSION,
        command: "impossibility",
        group_sizes: cfg.group_sizes,
        cells_per_group: k,
        grid_steps: q,
        tolerance: cfg.tolerance,
        n_instances: rows.len(),
        n_witnesses: rows.iter().filter(|r| r.witness_found).count(),
        all_match: rows.iter().all(|r| r.matches),
        rows,
    };

    ensure_dir(out)?;
    write_file(out, "feasibility.csv", feasibility_csv(&report))?;
    write_json(out, "report.json", &report)?;
    println!(
        "{} instances, {} with a witness; expectation {}",
        report.n_instances,
        report.n_witnesses,
        if report.all_match { "met on every row" } else { "violated" }
    );
    Ok(Status::Clean)
}

fn feasibility_csv(r: &ImpossibilityReport) -> String {
    let mut out = String::from(
        "layout,protected_size,control_size,protected_defaults,control_defaults,protected_base_rate,\
         control_base_rate,equal_base_rates,perfect_prediction,expected_witness,witness_found,matches,witness\n",
    );
    for row in &r.rows {
        let layout = match row.layout {
            Layout::Pure => "pure",
            Layout::Mixed => "mixed",
        };
        let witness = row
            .witness
            .as_ref()
            .map(|w| w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{layout},{},{},{},{},{},{},{},{},{},{},{},{witness}",
            r.group_sizes[0],
            r.group_sizes[1],
            row.protected_defaults,
            row.control_defaults,
            row.protected_base_rate,
            row.control_base_rate,
            row.equal_base_rates,
            row.perfect_prediction,
            row.expected_witness.map(|e| e.to_string()).unwrap_or_default(),
            row.witness_found,
            row.matches
        );
    }
    out
}
