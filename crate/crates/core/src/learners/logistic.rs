use serde::{Deserialize, Serialize};

use super::model::{
    CurvePoint, Hyperparams, LinearWeights, Model, ModelKind, Parameters, TrainingCurve, TrainingInfo,
    MODEL_FORMAT_VERSION,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats::{logistic_loss, sigmoid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticHyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    /// Unused by full-batch descent from zero; recorded in model metadata.
    pub seed: u64,
}

impl Default for LogisticHyperparams {
    fn default() -> Self {
        LogisticHyperparams {
            learning_rate: 0.5,
            epochs: 500,
            l2_penalty: 0.0,
            seed: 0,
        }
    }
}

impl LogisticHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "l2_penalty must be finite and non-negative, got {}",
                self.l2_penalty
            )));
        }
        Ok(())
    }
}

/// Mean log-loss plus `l2/2 * |w|^2` over standardized features.
///
/// The intercept is not penalized.
#[derive(Debug, Clone)]
pub struct LogLossObjective {
    columns: Vec<Vec<f64>>,
    targets: Vec<f64>,
    l2: f64,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl LogLossObjective {
    pub fn new(train: &Dataset, l2_penalty: f64) -> Self {
        let n = train.n_rows() as f64;
        let mut means = Vec::with_capacity(train.n_features());
        let mut scales = Vec::with_capacity(train.n_features());
        let mut columns = Vec::with_capacity(train.n_features());
        for j in 0..train.n_features() {
            let col = train.column_at(j);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            let s = if var > 0.0 { var.sqrt() } else { 1.0 };
            columns.push(col.iter().map(|x| (x - m) / s).collect());
            means.push(m);
            scales.push(s);
        }
        LogLossObjective {
            columns,
            targets: train.outcome().iter().map(|&y| y as f64).collect(),
            l2: l2_penalty,
            means,
            scales,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn standardized_column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn logits(&self, weights: &[f64], intercept: f64) -> Vec<f64> {
        let mut z = vec![intercept; self.n_rows()];
        for (col, &w) in self.columns.iter().zip(weights) {
            for (zi, x) in z.iter_mut().zip(col) {
                *zi += w * x;
            }
        }
        z
    }

    pub fn loss_from_logits(&self, z: &[f64], weights: &[f64]) -> f64 {
        let data = z
            .iter()
            .zip(&self.targets)
            .map(|(&zi, &y)| logistic_loss(zi, y))
            .sum::<f64>()
            / self.n_rows() as f64;
        data + 0.5 * self.l2 * weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn loss(&self, weights: &[f64], intercept: f64) -> f64 {
        self.loss_from_logits(&self.logits(weights, intercept), weights)
    }

    /// Gradient with respect to `(weights, intercept)` given precomputed logits.
    pub fn gradient_from_logits(&self, z: &[f64], weights: &[f64]) -> (Vec<f64>, f64) {
        let n = self.n_rows() as f64;
        let residual: Vec<f64> = z
            .iter()
            .zip(&self.targets)
            .map(|(&zi, &y)| sigmoid(zi) - y)
            .collect();
        let grad_w = self
            .columns
            .iter()
            .zip(weights)
            .map(|(col, &w)| col.iter().zip(&residual).map(|(x, r)| x * r).sum::<f64>() / n + self.l2 * w)
            .collect();
        let grad_b = residual.iter().sum::<f64>() / n;
        (grad_w, grad_b)
    }

    pub fn gradient(&self, weights: &[f64], intercept: f64) -> (Vec<f64>, f64) {
        self.gradient_from_logits(&self.logits(weights, intercept), weights)
    }

    pub(crate) fn into_weights(self, weights: Vec<f64>, intercept: f64) -> LinearWeights {
        LinearWeights {
            weights,
            intercept,
            feature_means: self.means,
            feature_scales: self.scales,
        }
    }
}

pub(crate) fn require_trainable(train: &Dataset) -> Result<()> {
    if train.n_rows() < 2 {
        return Err(Error::InvalidConfig("training needs at least 2 rows".into()));
    }
    if !train.has_both_classes() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Epochs at which a loss snapshot is kept: the first, every tenth of the
/// run, and the last.
pub(crate) fn is_snapshot(epoch: usize, epochs: usize) -> bool {
    epoch == 1 || epoch == epochs || epoch.is_multiple_of((epochs / 10).max(1))
}

/// Runs full-batch descent from zero. `on_epoch` sees the loss evaluated
/// before each update.
fn descend(
    objective: &LogLossObjective,
    hp: &LogisticHyperparams,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<(Vec<f64>, f64)> {
    let mut w = vec![0.0; objective.n_features()];
    let mut b = 0.0;
    for epoch in 1..=hp.epochs {
        let z = objective.logits(&w, b);
        let loss = objective.loss_from_logits(&z, &w);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                component: "logistic".into(),
                epoch,
            });
        }
        on_epoch(epoch, loss);
        let (gw, gb) = objective.gradient_from_logits(&z, &w);
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= hp.learning_rate * g;
        }
        b -= hp.learning_rate * gb;
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                component: "logistic".into(),
                epoch,
            });
        }
    }
    Ok((w, b))
}

/// L2-regularized logistic regression by full-batch gradient descent from
/// zero weights on standardized features.
pub fn fit_logistic(train: &Dataset, hp: &LogisticHyperparams) -> Result<Model> {
    hp.validate()?;
    require_trainable(train)?;
    let objective = LogLossObjective::new(train, hp.l2_penalty);
    let mut curve = Vec::new();
    let (w, b) = descend(&objective, hp, |epoch, loss| {
        if is_snapshot(epoch, hp.epochs) {
            curve.push(CurvePoint { epoch, loss });
        }
    })?;
    Ok(Model {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Logistic,
        feature_subset: train.feature_names().to_vec(),
        parameters: Parameters::Linear(objective.into_weights(w, b)),
        training: TrainingInfo {
            hyperparams: Hyperparams::Logistic(hp.clone()),
            lambda: None,
            decision_threshold: None,
            alpha: None,
            curve: Some(TrainingCurve {
                predictor: curve,
                adversary: Vec::new(),
            }),
        },
    })
}

/// Loss before every epoch's update, for convergence diagnostics.
pub fn logistic_loss_trace(train: &Dataset, hp: &LogisticHyperparams) -> Result<Vec<f64>> {
    hp.validate()?;
    require_trainable(train)?;
    let objective = LogLossObjective::new(train, hp.l2_penalty);
    let mut trace = Vec::with_capacity(hp.epochs);
    descend(&objective, hp, |_, loss| trace.push(loss))?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(xs: &[(f64, f64, u8)]) -> Dataset {
        Dataset::new(
            vec!["x1".into(), "x2".into()],
            vec![xs.iter().map(|r| r.0).collect(), xs.iter().map(|r| r.1).collect()],
            xs.iter().map(|r| r.2).collect(),
            (0..xs.len()).map(|i| i.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_weights_at_zero() {
        let ds = toy(&[(0.0, 1.0, 0), (1.0, 0.0, 1), (2.0, 2.0, 1)]);
        let hp = LogisticHyperparams {
            learning_rate: 0.0,
            epochs: 1,
            ..Default::default()
        };
        let m = fit_logistic(&ds, &hp).unwrap();
        let lin = m.linear().unwrap();
        assert!(lin.weights.iter().all(|&w| w == 0.0));
        assert_eq!(lin.intercept, 0.0);
        assert!(m.predict(&ds).unwrap().as_slice().iter().all(|&s| s == 0.5));
    }

    #[test]
    fn rejects_zero_epochs_and_single_class() {
        let ds = toy(&[(0.0, 1.0, 0), (1.0, 0.0, 1)]);
        let hp = LogisticHyperparams {
            epochs: 0,
            ..Default::default()
        };
        assert!(matches!(fit_logistic(&ds, &hp), Err(Error::InvalidConfig(_))));
        let one_class = toy(&[(0.0, 1.0, 1), (1.0, 0.0, 1)]);
        assert!(matches!(
            fit_logistic(&one_class, &LogisticHyperparams::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn divergence_names_the_epoch() {
        let ds = toy(&[(0.0, 1.0, 0), (1.0, 0.0, 1), (3.0, -1.0, 0), (-2.0, 4.0, 1)]);
        let hp = LogisticHyperparams {
            learning_rate: 1e300,
            epochs: 50,
            ..Default::default()
        };
        match fit_logistic(&ds, &hp) {
            Err(Error::Divergence { epoch, component }) => {
                assert!(epoch >= 1);
                assert_eq!(component, "logistic");
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn intercept_gradient_at_zero_is_half_minus_base_rate() {
        let ds = toy(&[(0.0, 1.0, 0), (1.0, 0.0, 1), (2.0, 2.0, 1), (5.0, 3.0, 0), (1.0, 1.0, 1)]);
        let obj = LogLossObjective::new(&ds, 0.0);
        let (gw, gb) = obj.gradient(&[0.0, 0.0], 0.0);
        assert!((gb - (0.5 - 0.6)).abs() < 1e-15);
        // standardized columns are centered: weight gradient is -mean(y * x)
        for (j, g) in gw.iter().enumerate() {
            let expect = -obj
                .standardized_column(j)
                .iter()
                .zip(obj.targets())
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / 5.0;
            assert!((g - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn snapshots_cover_first_and_last_epoch() {
        let picked: Vec<usize> = (1..=25).filter(|&e| is_snapshot(e, 25)).collect();
        assert_eq!(picked, vec![1, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 25]);
        assert!(is_snapshot(1, 1));
    }
}
