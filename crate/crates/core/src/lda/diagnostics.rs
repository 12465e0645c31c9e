use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GroupLabels};
use crate::error::Result;
use crate::learners::Model;
use crate::stats::pearson;

/// Permutations averaged per feature.
pub const PERMUTATION_ROUNDS: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyDiagnostic {
    pub feature: String,
    /// Point-biserial correlation with protected-group membership.
    pub group_correlation: f64,
    /// Mean absolute change in score when the column is permuted.
    pub importance: f64,
    /// `importance * |group_correlation|`; the table is sorted on this.
    pub bias_risk: f64,
    /// The column is constant, so its correlation is reported as 0.
    pub constant: bool,
}

/// Per-feature group correlation and permutation importance, highest bias
/// risk first. Features the model does not read get importance 0.
pub fn proxy_diagnostics(
    dataset: &Dataset,
    groups: &GroupLabels,
    model: &Model,
    seed: u64,
) -> Result<Vec<ProxyDiagnostic>> {
    groups.check_linked(dataset)?;
    groups.require_both()?;
    let indicator = groups.indicator();
    let base = model.predict(dataset)?;
    let n = dataset.n_rows() as f64;

    let mut rows = (0..dataset.n_features())
        .into_par_iter()
        .map(|j| {
            let name = &dataset.feature_names()[j];
            let col = dataset.column_at(j);
            let corr = pearson(col, &indicator);
            let importance = if model.feature_subset.contains(name) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(j as u64);
                let mut total = 0.0;
                for _ in 0..PERMUTATION_ROUNDS {
                    let mut shuffled = col.to_vec();
                    shuffled.shuffle(&mut rng);
                    let scores = model.predict(&dataset.with_column_values(j, shuffled)?)?;
                    total += scores
                        .as_slice()
                        .iter()
                        .zip(base.as_slice())
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                        / n;
                }
                total / PERMUTATION_ROUNDS as f64
            } else {
                0.0
            };
            let group_correlation = corr.unwrap_or(0.0);
            Ok(ProxyDiagnostic {
                feature: name.clone(),
                group_correlation,
                importance,
                bias_risk: importance * group_correlation.abs(),
                constant: corr.is_none(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.bias_risk.total_cmp(&a.bias_risk));
    Ok(rows)
}
