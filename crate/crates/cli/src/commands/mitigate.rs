use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use fairscope_core::data::LabeledData;
use fairscope_core::learners::Model;
use fairscope_core::metrics::FairnessReport;
use fairscope_core::mitigate::{
    adversary_leakage, fit_adversarial, fit_fair_tree, AdversarialConfig, RegularizationConfig,
};
use serde::Serialize;

use super::{check_model_params, features_of};
use crate::config::{RunConfig, Technique};
use crate::output::{ensure_dir, opt, write_file, write_json, SCHEMA_VERSION};
use crate::Status;

pub const SELECTION_RULE: &str =
    "highest AIR among settings whose accuracy is within epsilon_predictiveness of the best setting";

#[derive(Debug, Clone, Serialize)]
struct SettingRow {
    value: f64,
    accuracy: f64,
    air: Option<f64>,
    statistical_parity_gap: f64,
    auc: Option<f64>,
    train_accuracy: f64,
    train_air: Option<f64>,
    /// Accuracy of a fresh adversary predicting group from the scores.
    leakage: Option<f64>,
    /// `feature<cutoff` for each internal node of a tree model.
    splits: Vec<String>,
    selected: bool,
}

#[derive(Debug, Serialize)]
struct MitigateReport {
    schema_version: u32,
    command: &'static str,
    technique: Technique,
    threshold: f64,
    n_train: usize,
    n_eval: usize,
    epsilon_predictiveness: f64,
    selection_rule: &'static str,
    selected_value: f64,
    settings: Vec<SettingRow>,
}

enum Fitter {
    Lambda(Vec<RegularizationConfig>),
    Alpha(Vec<AdversarialConfig>),
}

fn fitters(cfg: &RunConfig, grid: &[f64]) -> Result<Fitter> {
    Ok(match cfg.technique {
        Technique::Lambda => {
            let regs: Vec<RegularizationConfig> = grid
                .iter()
                .map(|&lambda| RegularizationConfig {
                    lambda,
                    decision_threshold: cfg.threshold,
                })
                .collect();
            for r in &regs {
                r.validate()?;
            }
            Fitter::Lambda(regs)
        }
        Technique::Alpha => {
            let advs: Vec<AdversarialConfig> = grid
                .iter()
                .map(|&alpha| {
                    let mut a = AdversarialConfig::matching(&cfg.logistic(), alpha);
                    a.adversary.learning_rate = cfg.adversary_learning_rate;
                    a
                })
                .collect();
            for a in &advs {
                a.validate()?;
            }
            Fitter::Alpha(advs)
        }
    })
}

fn splits_of(model: &Model) -> Vec<String> {
    model
        .tree()
        .map(|t| {
            t.splits()
                .into_iter()
                .map(|(f, c)| format!("{}<{}", model.feature_subset[f], c))
                .collect()
        })
        .unwrap_or_default()
}

/// Index of the highest-AIR setting among those within `eps` of the best
/// accuracy; undefined AIR ranks lowest and ties keep the earlier setting.
fn select(rows: &[SettingRow], eps: f64) -> usize {
    let best = rows.iter().map(|r| r.accuracy).fold(f64::NEG_INFINITY, f64::max);
    let mut pick: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        if r.accuracy < best - eps {
            continue;
        }
        let better = match pick {
            None => true,
            Some(p) => r.air.unwrap_or(f64::NEG_INFINITY) > rows[p].air.unwrap_or(f64::NEG_INFINITY),
        };
        if better {
            pick = Some(i);
        }
    }
    pick.expect("grid is non-empty")
}

pub fn mitigate(cfg: &RunConfig, out: &Path) -> Result<Status> {
    let grid = cfg.grid.clone().unwrap_or_else(|| match cfg.technique {
        Technique::Lambda => cfg.lambda_grid.clone(),
        Technique::Alpha => cfg.alpha_grid.clone(),
    });
    if grid.is_empty() {
        bail!("grid must contain at least one setting");
    }
    cfg.check_common()?;
    check_model_params(cfg)?;
    if !(cfg.epsilon_predictiveness >= 0.0 && cfg.epsilon_predictiveness.is_finite()) {
        bail!("epsilon_predictiveness must be finite and non-negative");
    }
    let fitter = fitters(cfg, &grid)?;

    let (ds, groups) = cfg.dataset()?;
    let (train, eval) = cfg.partitions(ds, groups)?;
    let train_x = features_of(cfg, &train.data)?;

    let models: Vec<Model> = match &fitter {
        Fitter::Lambda(regs) => regs
            .iter()
            .map(|r| fit_fair_tree(&train_x, &train.groups, r, &cfg.tree()))
            .collect::<Result<_, _>>()?,
        Fitter::Alpha(advs) => advs
            .iter()
            .map(|a| fit_adversarial(&train_x, &train.groups, a))
            .collect::<Result<_, _>>()?,
    };

    let evaluate = |m: &Model, data: &LabeledData| -> Result<FairnessReport> {
        let scores = m.predict(&data.data)?;
        Ok(FairnessReport::evaluate(&scores, data.data.outcome(), &data.groups, cfg.threshold, cfg.n_bins)?)
    };
    let mut rows = Vec::with_capacity(models.len());
    for (m, &value) in models.iter().zip(&grid) {
        let holdout = evaluate(m, &eval)?;
        let fit = evaluate(m, &train)?;
        let leakage = match cfg.technique {
            Technique::Alpha => Some(adversary_leakage(m, &eval.data, &eval.groups)?),
            Technique::Lambda => None,
        };
        rows.push(SettingRow {
            value,
            accuracy: holdout.accuracy,
            air: holdout.air,
            statistical_parity_gap: holdout.statistical_parity_gap,
            auc: holdout.auc,
            train_accuracy: fit.accuracy,
            train_air: fit.air,
            leakage,
            splits: splits_of(m),
            selected: false,
        });
    }
    let pick = select(&rows, cfg.epsilon_predictiveness);
    rows[pick].selected = true;

    let report = MitigateReport {
        schema_version: SCHEMA_VERSION,
        command: "mitigate",
        technique: cfg.technique,
        threshold: cfg.threshold,
        n_train: train.data.n_rows(),
        n_eval: eval.data.n_rows(),
        epsilon_predictiveness: cfg.epsilon_predictiveness,
        selection_rule: SELECTION_RULE,
        selected_value: grid[pick],
        settings: rows,
    };

    ensure_dir(out)?;
    write_file(out, "metrics.csv", metrics_csv(&report))?;
    write_file(out, "model.json", models[pick].to_json()? + "\n")?;
    write_json(out, "report.json", &report)?;
    let name = match cfg.technique {
        Technique::Lambda => "lambda",
        Technique::Alpha => "alpha",
    };
    println!("selected {name} = {}", report.selected_value);
    Ok(Status::Clean)
}

fn metrics_csv(r: &MitigateReport) -> String {
    let name = match r.technique {
        Technique::Lambda => "lambda",
        Technique::Alpha => "alpha",
    };
    let mut out = String::from(
        "technique,value,accuracy,air,statistical_parity_gap,auc,train_accuracy,train_air,leakage,splits,selected\n",
    );
    for s in &r.settings {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{},{},{},{},{}",
            s.value,
            s.accuracy,
            opt(s.air),
            s.statistical_parity_gap,
            opt(s.auc),
            s.train_accuracy,
            opt(s.train_air),
            opt(s.leakage),
            s.splits.join(";"),
            s.selected
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(accuracy: f64, air: Option<f64>) -> SettingRow {
        SettingRow {
            value: 0.0,
            accuracy,
            air,
            statistical_parity_gap: 0.0,
            auc: None,
            train_accuracy: accuracy,
            train_air: air,
            leakage: None,
            splits: Vec::new(),
            selected: false,
        }
    }

    #[test]
    fn selection_trades_accuracy_within_epsilon_for_air() {
        let rows = [row(0.75, Some(0.65)), row(0.73, Some(0.79)), row(0.60, Some(1.0))];
        assert_eq!(select(&rows, 0.03), 1);
        assert_eq!(select(&rows, 0.0), 0);
        assert_eq!(select(&rows, 0.2), 2);
        let tied = [row(0.7, None), row(0.7, Some(0.5)), row(0.7, Some(0.5))];
        assert_eq!(select(&tied, 0.0), 1);
    }
}
