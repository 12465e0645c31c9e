mod audit;
mod impossibility;
mod mitigate;
mod search;
mod simulate;

pub use audit::audit;
pub use impossibility::impossibility;
pub use mitigate::mitigate;
pub use search::search;
pub use simulate::simulate;

use anyhow::{bail, Result};
use fairscope_core::data::Dataset;
use fairscope_core::learners::{fit_logistic, fit_tree, Model};
use fairscope_core::lda::BaselineLearner;

use crate::config::RunConfig;

/// The configured feature subset of `data`, or all of it.
pub(crate) fn features_of(cfg: &RunConfig, data: &Dataset) -> Result<Dataset> {
    match &cfg.features {
        Some(f) if f.is_empty() => bail!("features must not be empty"),
        Some(f) => Ok(data.select_features(f)?),
        None => Ok(data.clone()),
    }
}

pub(crate) fn check_model_params(cfg: &RunConfig) -> Result<()> {
    cfg.logistic().validate()?;
    cfg.tree().validate()?;
    Ok(())
}

pub(crate) fn train_baseline(cfg: &RunConfig, train: &Dataset) -> Result<Model> {
    let data = features_of(cfg, train)?;
    Ok(match cfg.learner {
        BaselineLearner::Logistic => fit_logistic(&data, &cfg.logistic())?,
        BaselineLearner::Tree => fit_tree(&data, &cfg.tree())?,
    })
}
