use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    default_floor, is_lda, pareto_frontier, prong1_adverse_impact, prong2_business_need, prong3_select,
    proxy_diagnostics, CandidateModel, FailedCandidate, Prong1, ProxyDiagnostic, SearchConfig, StrategyTag,
};
use super::search::{fit_baseline, search_alternatives};
use crate::data::LabeledData;
use crate::error::Result;
use crate::learners::{Model, ModelKind};
use crate::metrics::FairnessReport;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub strategy: StrategyTag,
    pub model_kind: ModelKind,
    pub features: Vec<String>,
    pub predictiveness: f64,
    pub air: Option<f64>,
    pub auc: Option<f64>,
    pub statistical_parity_gap: f64,
}

impl From<&CandidateModel> for CandidateSummary {
    fn from(c: &CandidateModel) -> Self {
        CandidateSummary {
            strategy: c.tag.clone(),
            model_kind: c.model.kind,
            features: c.model.feature_subset.clone(),
            predictiveness: c.predictiveness,
            air: c.air,
            auc: c.report.auc,
            statistical_parity_gap: c.report.statistical_parity_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedCandidate {
    #[serde(flatten)]
    pub summary: CandidateSummary,
    pub model: Model,
    pub report: FairnessReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prong2 {
    pub business_need_met: bool,
    pub predictiveness: f64,
    pub floor: f64,
    /// `configured`, or `majority_rate_plus_margin` for the default heuristic.
    pub floor_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prong3 {
    pub lda_found: bool,
    pub selected: Option<SelectedCandidate>,
    pub frontier: Vec<CandidateSummary>,
    pub candidates: Vec<CandidateSummary>,
    pub failures: Vec<FailedCandidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NoImpact,
    ImpactWithLda,
    /// Impact found and either no alternative qualified or the baseline
    /// missed the business-need floor (so no search was run).
    ImpactWithoutLda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurdenShiftingReport {
    pub schema_version: u32,
    pub config: SearchConfig,
    pub n_train: usize,
    pub n_test: usize,
    pub baseline: CandidateSummary,
    pub baseline_report: FairnessReport,
    pub proxy_diagnostics: Vec<ProxyDiagnostic>,
    pub prong1: Prong1,
    pub prong2: Prong2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prong3: Option<Prong3>,
    pub verdict: Verdict,
    pub narrative: String,
}

fn fmt_air(air: Option<f64>) -> String {
    air.map_or_else(|| "undefined".to_string(), |a| format!("{a:.4}"))
}

/// Adverse impact, then business need, then (only if both hold) the search
/// for a less discriminatory alternative among the baseline and every
/// candidate, all scored on `test` with the same threshold.
pub fn run_burden_shifting(train: &LabeledData, test: &LabeledData, config: &SearchConfig) -> Result<BurdenShiftingReport> {
    config.validate()?;
    let baseline = fit_baseline(train, test, config)?;
    let diagnostics = proxy_diagnostics(&test.data, &test.groups, &baseline.model, config.seed)?;

    let prong1 = prong1_adverse_impact(&baseline.report, config.air_threshold);
    let (floor, floor_rule) = match config.business_floor {
        Some(f) => (f, "configured"),
        None => (
            default_floor(baseline.report.majority_rate(), config.floor_margin),
            "majority_rate_plus_margin",
        ),
    };
    let prong2 = Prong2 {
        business_need_met: prong2_business_need(baseline.predictiveness, floor),
        predictiveness: baseline.predictiveness,
        floor,
        floor_rule: floor_rule.to_string(),
    };

    let prong3 = if prong1.adverse_impact_found && prong2.business_need_met {
        let outcome = search_alternatives(&baseline, train, test, config)?;
        let mut pool = Vec::with_capacity(outcome.candidates.len() + 1);
        pool.push(baseline.clone());
        pool.extend(outcome.candidates.iter().cloned());
        let frontier = pareto_frontier(&pool);
        let selected = prong3_select(&frontier, &baseline, config.epsilon_predictiveness, config.min_air_gain);
        if let Some(s) = &selected {
            assert!(
                is_lda(s, &baseline, config.epsilon_predictiveness, config.min_air_gain),
                "selected candidate {} violates the LDA constraints",
                s.tag
            );
        }
        Some(Prong3 {
            lda_found: selected.is_some(),
            selected: selected.map(|c| SelectedCandidate {
                summary: CandidateSummary::from(&c),
                model: c.model,
                report: c.report,
            }),
            frontier: frontier.iter().map(CandidateSummary::from).collect(),
            candidates: outcome.candidates.iter().map(CandidateSummary::from).collect(),
            failures: outcome.failures,
        })
    } else {
        None
    };

    let verdict = match (&prong1, &prong3) {
        (p, _) if !p.adverse_impact_found => Verdict::NoImpact,
        (_, Some(p3)) if p3.lda_found => Verdict::ImpactWithLda,
        _ => Verdict::ImpactWithoutLda,
    };

    let mut report = BurdenShiftingReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        n_train: train.data.n_rows(),
        n_test: test.data.n_rows(),
        baseline: CandidateSummary::from(&baseline),
        baseline_report: baseline.report,
        proxy_diagnostics: diagnostics,
        prong1,
        prong2,
        prong3,
        verdict,
        narrative: String::new(),
    };
    report.narrative = report.compose_narrative();
    Ok(report)
}

impl BurdenShiftingReport {
    fn compose_narrative(&self) -> String {
        let mut s = String::new();
        let p1 = &self.prong1;
        if p1.air_undefined {
            let _ = write!(
                s,
                "The baseline approves no control-group applicants, so the adverse impact ratio is undefined; this is treated as adverse impact. "
            );
        } else {
            let _ = write!(
                s,
                "The baseline's adverse impact ratio is {} against a screening threshold of {}: {}. ",
                fmt_air(p1.air),
                p1.threshold,
                if p1.adverse_impact_found {
                    "adverse impact is indicated"
                } else {
                    "no adverse impact is indicated"
                }
            );
        }
        let p2 = &self.prong2;
        let _ = write!(
            s,
            "Holdout accuracy is {:.4} against a floor of {:.4} ({}), so the business-need test is {}. ",
            p2.predictiveness,
            p2.floor,
            if p2.floor_rule == "configured" {
                "configured"
            } else {
                "heuristic: majority-class rate plus margin"
            },
            if p2.business_need_met { "met" } else { "not met" }
        );
        match &self.prong3 {
            None if !p1.adverse_impact_found => {
                let _ = write!(s, "No alternative search was needed.");
            }
            None => {
                let _ = write!(s, "No alternative search was run because the baseline does not meet the floor.");
            }
            Some(p3) => {
                let _ = write!(
                    s,
                    "{} alternatives were evaluated ({} failed); {} lie on the accuracy/AIR frontier. ",
                    p3.candidates.len() + p3.failures.len(),
                    p3.failures.len(),
                    p3.frontier.len()
                );
                match &p3.selected {
                    Some(sel) => {
                        let _ = write!(
                            s,
                            "A less discriminatory alternative was found: {} with accuracy {:.4} and AIR {} (tolerance {} accuracy, minimum AIR gain {}).",
                            sel.summary.strategy,
                            sel.summary.predictiveness,
                            fmt_air(sel.summary.air),
                            self.config.epsilon_predictiveness,
                            self.config.min_air_gain
                        );
                    }
                    None => {
                        let _ = write!(
                            s,
                            "No alternative improves AIR by at least {} while staying within {} of baseline accuracy.",
                            self.config.min_air_gain, self.config.epsilon_predictiveness
                        );
                    }
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `strategy,predictiveness,air` for each frontier member; header only
    /// when no search was run.
    pub fn frontier_csv(&self) -> String {
        let mut out = String::from("strategy,predictiveness,air\n");
        if let Some(p3) = &self.prong3 {
            for c in &p3.frontier {
                let air = c.air.map(|a| a.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{}", csv_field(&c.strategy.to_string()), c.predictiveness, air);
            }
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let b = &self.baseline;
        let r = &self.baseline_report;
        let _ = writeln!(md, "# Burden-shifting review\n");
        let _ = writeln!(md, "{}\n", self.narrative);
        let _ = writeln!(md, "Verdict: `{}`\n", serde_json::to_value(self.verdict).unwrap().as_str().unwrap_or(""));

        let _ = writeln!(md, "## Baseline\n");
        let _ = writeln!(md, "| measure | value |\n|---|---|");
        let _ = writeln!(md, "| model | {} |", b.model_kind.as_str());
        let _ = writeln!(md, "| features | {} |", b.features.join(", "));
        let _ = writeln!(md, "| evaluation rows | {} |", r.n_rows);
        let _ = writeln!(md, "| threshold | {} |", r.threshold);
        let _ = writeln!(md, "| accuracy | {:.4} |", r.accuracy);
        let _ = writeln!(md, "| AUC | {} |", fmt_air(r.auc));
        let _ = writeln!(
            md,
            "| approval rate (protected / control) | {:.4} / {:.4} |",
            r.favorable_rates.protected, r.favorable_rates.control
        );
        let _ = writeln!(md, "| adverse impact ratio | {} |", fmt_air(r.air));
        let _ = writeln!(md, "| statistical parity gap | {:.4} |", r.statistical_parity_gap);
        let _ = writeln!(md, "| max calibration gap | {} |", fmt_air(r.calibration.max_gap));
        let _ = writeln!(md, "| balance gap, non-defaulters | {} |", fmt_air(r.balance_negative_gap));
        let _ = writeln!(md, "| balance gap, defaulters | {} |\n", fmt_air(r.balance_positive_gap));

        let _ = writeln!(md, "## 1. Adverse impact\n");
        let _ = writeln!(
            md,
            "AIR {} vs threshold {}: **{}**{}\n",
            fmt_air(self.prong1.air),
            self.prong1.threshold,
            if self.prong1.adverse_impact_found { "impact found" } else { "no impact" },
            if self.prong1.air_undefined { " (AIR undefined)" } else { "" }
        );

        let _ = writeln!(md, "## 2. Business need\n");
        let _ = writeln!(
            md,
            "Accuracy {:.4} vs floor {:.4} (`{}`): **{}**\n",
            self.prong2.predictiveness,
            self.prong2.floor,
            self.prong2.floor_rule,
            if self.prong2.business_need_met { "met" } else { "not met" }
        );

        let _ = writeln!(md, "## 3. Less discriminatory alternative\n");
        match &self.prong3 {
            None => {
                let _ = writeln!(md, "Not evaluated.\n");
            }
            Some(p3) => {
                let _ = writeln!(
                    md,
                    "Tolerances: accuracy within {} of baseline, AIR gain at least {}.\n",
                    self.config.epsilon_predictiveness, self.config.min_air_gain
                );
                let _ = writeln!(md, "| strategy | accuracy | AIR | selected |\n|---|---|---|---|");
                let chosen = p3.selected.as_ref().map(|s| &s.summary.strategy);
                for c in &p3.frontier {
                    let _ = writeln!(
                        md,
                        "| {} | {:.4} | {} | {} |",
                        c.strategy,
                        c.predictiveness,
                        fmt_air(c.air),
                        if Some(&c.strategy) == chosen { "yes" } else { "" }
                    );
                }
                let _ = writeln!(md);
                if !p3.failures.is_empty() {
                    let _ = writeln!(md, "Failed candidates:\n");
                    for f in &p3.failures {
                        let _ = writeln!(md, "- {}: {}", f.strategy, f.error);
                    }
                    let _ = writeln!(md);
                }
            }
        }

        let _ = writeln!(md, "## Proxy diagnostics\n");
        let _ = writeln!(
            md,
            "| feature | group correlation | importance | bias risk |\n|---|---|---|---|"
        );
        for d in &self.proxy_diagnostics {
            let _ = writeln!(
                md,
                "| {}{} | {:.4} | {:.4} | {:.4} |",
                d.feature,
                if d.constant { " (constant)" } else { "" },
                d.group_correlation,
                d.importance,
                d.bias_risk
            );
        }
        md
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
