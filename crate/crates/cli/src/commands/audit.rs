use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fairscope_core::data::LabeledData;
use fairscope_core::learners::Model;
use fairscope_core::lda::{prong1_adverse_impact, proxy_diagnostics, Prong1, ProxyDiagnostic};
use fairscope_core::metrics::FairnessReport;
use serde::Serialize;

use super::{check_model_params, train_baseline};
use crate::config::RunConfig;
use crate::output::{ensure_dir, opt4, write_file, write_json, SCHEMA_VERSION};
use crate::Status;

#[derive(Debug, Serialize)]
struct AuditReport {
    schema_version: u32,
    command: &'static str,
    model_source: &'static str,
    model_kind: String,
    features: Vec<String>,
    n_train: Option<usize>,
    n_eval: usize,
    air_threshold: f64,
    prong1: Prong1,
    metrics: FairnessReport,
    proxy_diagnostics: Vec<ProxyDiagnostic>,
}

pub fn audit(cfg: &RunConfig, out: &Path) -> Result<Status> {
    cfg.check_common()?;
    if !(cfg.air_threshold >= 0.0 && cfg.air_threshold.is_finite()) {
        bail!("air_threshold must be finite and non-negative, got {}", cfg.air_threshold);
    }
    check_model_params(cfg)?;

    let (ds, groups) = cfg.dataset()?;
    let (model, eval, n_train, source) = match &cfg.model {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
            let model = Model::from_json(&text).with_context(|| format!("parsing model {}", path.display()))?;
            (model, LabeledData::new(ds, groups)?, None, "loaded")
        }
        None => {
            let (train, eval) = cfg.partitions(ds, groups)?;
            let model = train_baseline(cfg, &train.data)?;
            (model, eval, Some(train.data.n_rows()), "trained")
        }
    };

    let scores = model.predict(&eval.data)?;
    let metrics = FairnessReport::evaluate(&scores, eval.data.outcome(), &eval.groups, cfg.threshold, cfg.n_bins)?;
    let prong1 = prong1_adverse_impact(&metrics, cfg.air_threshold);
    let diagnostics = proxy_diagnostics(&eval.data, &eval.groups, &model, cfg.seed)?;

    let report = AuditReport {
        schema_version: SCHEMA_VERSION,
        command: "audit",
        model_source: source,
        model_kind: model.kind.as_str().to_string(),
        features: model.feature_subset.clone(),
        n_train,
        n_eval: eval.data.n_rows(),
        air_threshold: cfg.air_threshold,
        prong1,
        metrics,
        proxy_diagnostics: diagnostics,
    };

    ensure_dir(out)?;
    write_file(out, "model.json", model.to_json()? + "\n")?;
    write_json(out, "report.json", &report)?;
    write_file(out, "report.md", markdown(&report))?;
    write_file(out, "calibration.csv", report.metrics.calibration.to_csv())?;

    let impact = report.prong1.adverse_impact_found;
    println!(
        "AIR {} (threshold {}): {}",
        opt4(report.prong1.air),
        report.air_threshold,
        if impact { "adverse impact" } else { "no adverse impact" }
    );
    Ok(if impact { Status::Impact } else { Status::Clean })
}

fn markdown(r: &AuditReport) -> String {
    let m = &r.metrics;
    let mut md = String::new();
    let _ = writeln!(md, "# Fairness audit\n");
    let _ = writeln!(
        md,
        "{} {} model on {} features, evaluated on {} rows at threshold {}.\n",
        r.model_source,
        r.model_kind,
        r.features.len(),
        r.n_eval,
        m.threshold
    );
    let _ = writeln!(md, "| measure | protected | control |\n|---|---|---|");
    let _ = writeln!(md, "| rows | {} | {} |", m.group_sizes.protected, m.group_sizes.control);
    let _ = writeln!(md, "| default rate | {:.4} | {:.4} |", m.base_rates.protected, m.base_rates.control);
    let _ = writeln!(
        md,
        "| approval rate | {:.4} | {:.4} |\n",
        m.favorable_rates.protected, m.favorable_rates.control
    );
    let _ = writeln!(md, "| measure | value |\n|---|---|");
    let _ = writeln!(md, "| accuracy | {:.4} |", m.accuracy);
    let _ = writeln!(md, "| AUC | {} |", opt4(m.auc));
    let _ = writeln!(md, "| adverse impact ratio | {} |", opt4(m.air));
    let _ = writeln!(md, "| statistical parity gap | {:.4} |", m.statistical_parity_gap);
    let _ = writeln!(md, "| max calibration gap | {} |", opt4(m.calibration.max_gap));
    let _ = writeln!(md, "| balance gap, non-defaulters | {} |", opt4(m.balance_negative_gap));
    let _ = writeln!(md, "| balance gap, defaulters | {} |\n", opt4(m.balance_positive_gap));
    let _ = writeln!(
        md,
        "Adverse impact (AIR below {}): **{}**\n",
        r.air_threshold,
        if r.prong1.adverse_impact_found { "yes" } else { "no" }
    );
    let _ = writeln!(md, "## Proxy diagnostics\n");
    let _ = writeln!(md, "| feature | group correlation | importance | bias risk |\n|---|---|---|---|");
    for d in &r.proxy_diagnostics {
        let _ = writeln!(
            md,
            "| {} | {:.4} | {:.4} | {:.4} |",
            d.feature, d.group_correlation, d.importance, d.bias_risk
        );
    }
    md
}
