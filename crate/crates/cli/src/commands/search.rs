use std::path::Path;

use anyhow::Result;
use fairscope_core::lda::{fit_baseline, run_burden_shifting, Verdict};

use super::check_model_params;
use crate::config::RunConfig;
use crate::output::{ensure_dir, write_file};
use crate::Status;

pub fn search(cfg: &RunConfig, out: &Path) -> Result<Status> {
    let search = cfg.search();
    search.validate()?;
    cfg.check_common()?;
    check_model_params(cfg)?;

    let (ds, groups) = cfg.dataset()?;
    let (train, test) = cfg.partitions(ds, groups)?;
    let report = run_burden_shifting(&train, &test, &search)?;

    // the selected alternative, else the baseline
    let model = match report.prong3.as_ref().and_then(|p| p.selected.as_ref()) {
        Some(sel) => sel.model.clone(),
        None => fit_baseline(&train, &test, &search)?.model,
    };

    ensure_dir(out)?;
    write_file(out, "report.json", report.to_json()? + "\n")?;
    write_file(out, "report.md", report.to_markdown())?;
    write_file(out, "frontier.csv", report.frontier_csv())?;
    write_file(out, "model.json", model.to_json()? + "\n")?;
    println!("{}", report.narrative);

    Ok(match report.verdict {
        Verdict::NoImpact => Status::Clean,
        Verdict::ImpactWithLda => Status::Impact,
        Verdict::ImpactWithoutLda => Status::ImpactWithoutAlternative,
    })
}
