//! `fairscope`: batch fairness audits, mitigation sweeps and
//! less-discriminatory-alternative searches for binary credit risk models.
//!
//! Exit codes: 0 clean, 1 error, 2 adverse impact found (for `search`: found
//! together with a qualifying alternative), 3 adverse impact without an
//! alternative.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "fairscope", version, about = "Fairness audit and mitigation for binary credit risk models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic applicant population (dataset.csv, provenance.json)
    Simulate(SimulateArgs),
    /// Train or load a model and report its fairness metrics
    Audit(AuditArgs),
    /// Sweep a mitigation setting (fair-tree lambda or adversarial alpha)
    Mitigate(MitigateArgs),
    /// Run the three-prong burden-shifting review with an alternative search
    Search(SearchArgs),
    /// Tabulate when calibration and both balance conditions can hold together
    Impossibility(ImpossibilityArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file with a flat key namespace; flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (created if missing; files are overwritten)
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Approve iff score < threshold
    #[arg(long, value_name = "P")]
    threshold: Option<f64>,
    #[arg(long, value_name = "NAME")]
    group_column: Option<String>,
    #[arg(long, value_name = "NAME")]
    outcome_column: Option<String>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV; a synthetic scenario is generated when absent
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    id_column: Option<String>,
    /// Share of rows used for training; 1 trains and evaluates on all rows
    #[arg(long, value_name = "F")]
    train_fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_rows: Option<usize>,
    #[arg(long)]
    base_rate_protected: Option<f64>,
    #[arg(long)]
    base_rate_control: Option<f64>,
    #[arg(long)]
    proxy_correlation: Option<f64>,
    #[arg(long, value_name = "NAME")]
    id_column: Option<String>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    /// Evaluate a saved model.json on the full input instead of training
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// `logistic` or `tree`
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    air_threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct MitigateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    /// `lambda` (fair tree) or `alpha` (adversarial debiasing)
    #[arg(long)]
    technique: Option<String>,
    /// Comma-separated settings to sweep
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    /// `logistic` or `tree`
    #[arg(long)]
    learner: Option<String>,
    /// Maximum number of alternatives trained
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    business_floor: Option<f64>,
}

#[derive(Debug, Args)]
struct ImpossibilityArgs {
    #[command(flatten)]
    common: Common,
    /// Score grid resolution q (scores in {0, 1/q, ..., 1})
    #[arg(long)]
    grid_steps: Option<usize>,
    /// Protected and control group sizes
    #[arg(long, num_args = 2, value_names = ["PROTECTED", "CONTROL"])]
    group_sizes: Option<Vec<usize>>,
}

/// Flag values that override config-file keys.
#[derive(Default)]
struct Overrides(Vec<(&'static str, Value)>);

impl Overrides {
    fn set<T: Into<Value>>(&mut self, key: &'static str, value: Option<T>) {
        if let Some(v) = value {
            self.0.push((key, v.into()));
        }
    }

    fn common(&mut self, c: &Common) {
        self.set("seed", c.seed);
        self.set("threshold", c.threshold);
        self.set("group_column", c.group_column.clone());
        self.set("outcome_column", c.outcome_column.clone());
    }

    fn data(&mut self, d: &DataArgs) {
        self.set("input", d.input.as_ref().map(|p| p.to_string_lossy().into_owned()));
        self.set("id_column", d.id_column.clone());
        self.set("train_fraction", d.train_fraction);
    }
}

/// Process outcome mapped onto the exit-code contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    Impact,
    ImpactWithoutAlternative,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Clean => 0,
            Status::Impact => 2,
            Status::ImpactWithoutAlternative => 3,
        }
    }
}

fn run(cli: Cli) -> Result<Status> {
    let mut o = Overrides::default();
    match cli.command {
        Command::Simulate(a) => {
            o.common(&a.common);
            o.set("n_rows", a.n_rows);
            o.set("base_rate_protected", a.base_rate_protected);
            o.set("base_rate_control", a.base_rate_control);
            o.set("proxy_correlation", a.proxy_correlation);
            o.set("id_column", a.id_column);
            let cfg = RunConfig::load(a.common.config.as_deref(), o.0)?;
            commands::simulate(&cfg, &a.common.out)
        }
        Command::Audit(a) => {
            o.common(&a.common);
            o.data(&a.data);
            o.set("model", a.model.map(|p| p.to_string_lossy().into_owned()));
            o.set("learner", a.learner);
            o.set("air_threshold", a.air_threshold);
            let cfg = RunConfig::load(a.common.config.as_deref(), o.0)?;
            commands::audit(&cfg, &a.common.out)
        }
        Command::Mitigate(a) => {
            o.common(&a.common);
            o.data(&a.data);
            o.set("technique", a.technique);
            o.set("grid", a.grid);
            let cfg = RunConfig::load(a.common.config.as_deref(), o.0)?;
            commands::mitigate(&cfg, &a.common.out)
        }
        Command::Search(a) => {
            o.common(&a.common);
            o.data(&a.data);
            o.set("learner", a.learner);
            o.set("budget", a.budget);
            o.set("business_floor", a.business_floor);
            let cfg = RunConfig::load(a.common.config.as_deref(), o.0)?;
            commands::search(&cfg, &a.common.out)
        }
        Command::Impossibility(a) => {
            o.common(&a.common);
            o.set("grid_steps", a.grid_steps);
            o.set("group_sizes", a.group_sizes);
            let cfg = RunConfig::load(a.common.config.as_deref(), o.0)?;
            commands::impossibility(&cfg, &a.common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the generic error code; help and version exit 0
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
