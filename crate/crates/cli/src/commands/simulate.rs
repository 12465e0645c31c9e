use std::path::Path;

use anyhow::Result;
use fairscope_core::data::{generate_scenario, write_csv, Group, ScenarioConfig, PROXY_FEATURE};
use fairscope_core::metrics::PerGroup;
use fairscope_core::stats::pearson;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_file, write_json, SCHEMA_VERSION};
use crate::Status;

pub const DATASET_FILE: &str = "dataset.csv";

#[derive(Debug, Serialize)]
struct Provenance {
    schema_version: u32,
    command: &'static str,
    scenario: ScenarioConfig,
    dataset_file: &'static str,
    sha256: String,
    n_rows: usize,
    features: Vec<String>,
    group_sizes: PerGroup<usize>,
    empirical_base_rates: PerGroup<f64>,
    proxy_group_correlation: Option<f64>,
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Status> {
    let scenario = cfg.scenario();
    scenario.validate()?;
    let (ds, groups) = generate_scenario(&scenario)?;

    let mut opts = cfg.load_options();
    if cfg.id_column.is_none() {
        opts = opts.id_column("id");
    }
    let mut csv = Vec::new();
    write_csv(&mut csv, &ds, Some(&groups), &opts)?;

    let count = |g: Group| groups.count(g);
    let rate = |g: Group| {
        let (n, d) = groups
            .as_slice()
            .iter()
            .zip(ds.outcome())
            .filter(|(&x, _)| x == g)
            .fold((0usize, 0usize), |(n, d), (_, &y)| (n + 1, d + y as usize));
        d as f64 / n as f64
    };
    let provenance = Provenance {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        scenario,
        dataset_file: DATASET_FILE,
        sha256: hex::encode(Sha256::digest(&csv)),
        n_rows: ds.n_rows(),
        features: ds.feature_names().to_vec(),
        group_sizes: PerGroup {
            protected: count(Group::Protected),
            control: count(Group::Control),
        },
        empirical_base_rates: PerGroup {
            protected: rate(Group::Protected),
            control: rate(Group::Control),
        },
        proxy_group_correlation: ds.column(PROXY_FEATURE).and_then(|c| pearson(c, &groups.indicator())),
    };

    ensure_dir(out)?;
    write_file(out, DATASET_FILE, &csv)?;
    write_json(out, "provenance.json", &provenance)?;
    println!(
        "wrote {} rows to {} (sha256 {})",
        provenance.n_rows,
        out.join(DATASET_FILE).display(),
        provenance.sha256
    );
    Ok(Status::Clean)
}
