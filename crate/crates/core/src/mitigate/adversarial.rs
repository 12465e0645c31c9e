use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Group, GroupLabels};
use crate::error::{Error, Result};
use crate::learners::{
    fit_logistic, is_snapshot, require_trainable, CurvePoint, Hyperparams, LogLossObjective,
    LogisticHyperparams, Model, ModelKind, Parameters, TrainingCurve, TrainingInfo, MODEL_FORMAT_VERSION,
};
use crate::stats::{logistic_loss, sigmoid};

/// One gradient step's settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepParams {
    pub learning_rate: f64,
    pub l2_penalty: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        StepParams {
            learning_rate: 0.5,
            l2_penalty: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarialConfig {
    /// Weight on the adversary's loss in the predictor objective.
    pub alpha: f64,
    pub predictor: StepParams,
    pub adversary: StepParams,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig {
            alpha: 1.0,
            predictor: StepParams::default(),
            adversary: StepParams {
                learning_rate: 1.0,
                l2_penalty: 0.0,
            },
            epochs: 500,
            seed: 0,
        }
    }
}

impl AdversarialConfig {
    /// Predictor settings taken from a plain logistic configuration.
    pub fn matching(hp: &LogisticHyperparams, alpha: f64) -> Self {
        AdversarialConfig {
            alpha,
            predictor: StepParams {
                learning_rate: hp.learning_rate,
                l2_penalty: hp.l2_penalty,
            },
            epochs: hp.epochs,
            seed: hp.seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be finite and non-negative, got {}",
                self.alpha
            )));
        }
        for (name, s) in [("predictor", &self.predictor), ("adversary", &self.adversary)] {
            if !(s.learning_rate >= 0.0 && s.learning_rate.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} learning_rate must be non-negative")));
            }
            if !(s.l2_penalty >= 0.0 && s.l2_penalty.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} l2_penalty must be non-negative")));
            }
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Logistic predictor trained against a logistic adversary that tries to
/// recover group membership from the predictor's score.
///
/// Each epoch first takes one gradient step on the adversary's own log-loss,
/// then updates the predictor with
/// `g_p - proj(g_p onto g_a) - alpha * g_a`, where `g_p` and `g_a` are the
/// gradients of the predictor and adversary losses with respect to the
/// predictor's parameters. The projection removes the part of the predictor
/// step that would help the adversary. `alpha = 0` disables the adversary
/// entirely, so the predictor follows exactly the same path as
/// [`fit_logistic`].
pub fn fit_adversarial(train: &Dataset, groups: &GroupLabels, config: &AdversarialConfig) -> Result<Model> {
    config.validate()?;
    require_trainable(train)?;
    groups.check_linked(train)?;
    groups.require_both()?;

    let objective = LogLossObjective::new(train, config.predictor.l2_penalty);
    let target = groups.indicator();
    let n = train.n_rows() as f64;
    let (lr, alr, al2) = (
        config.predictor.learning_rate,
        config.adversary.learning_rate,
        config.adversary.l2_penalty,
    );

    let mut w = vec![0.0; objective.n_features()];
    let mut b = 0.0;
    // adversary: P(protected) = sigmoid(c * score + d)
    let (mut c, mut d) = (0.0f64, 0.0f64);
    let mut curve = TrainingCurve::default();

    for epoch in 1..=config.epochs {
        let z = objective.logits(&w, b);
        let loss = objective.loss_from_logits(&z, &w);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                component: "predictor".into(),
                epoch,
            });
        }
        let p: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();

        let adv_loss = p
            .iter()
            .zip(&target)
            .map(|(&pi, &g)| logistic_loss(c * pi + d, g))
            .sum::<f64>()
            / n
            + 0.5 * al2 * c * c;
        if !adv_loss.is_finite() {
            return Err(Error::Divergence {
                component: "adversary".into(),
                epoch,
            });
        }
        if is_snapshot(epoch, config.epochs) {
            curve.predictor.push(CurvePoint { epoch, loss });
            curve.adversary.push(CurvePoint { epoch, loss: adv_loss });
        }

        let (mut gc, mut gd) = (0.0, 0.0);
        for (&pi, &g) in p.iter().zip(&target) {
            let r = sigmoid(c * pi + d) - g;
            gc += r * pi;
            gd += r;
        }
        c -= alr * (gc / n + al2 * c);
        d -= alr * (gd / n);

        let (gw, gb) = objective.gradient_from_logits(&z, &w);
        if config.alpha == 0.0 {
            for (wj, g) in w.iter_mut().zip(&gw) {
                *wj -= lr * g;
            }
            b -= lr * gb;
        } else {
            // d(adversary loss)/d(logit) per row
            let rev: Vec<f64> = p
                .iter()
                .zip(&target)
                .map(|(&pi, &g)| (sigmoid(c * pi + d) - g) * c * pi * (1.0 - pi))
                .collect();
            // full parameter vector order: weights, then intercept
            let mut adv: Vec<f64> = (0..w.len())
                .map(|j| {
                    let col = objective.standardized_column(j);
                    col.iter().zip(&rev).map(|(x, r)| x * r).sum::<f64>() / n
                })
                .collect();
            adv.push(rev.iter().sum::<f64>() / n);
            let mut pred = gw;
            pred.push(gb);
            let norm2: f64 = adv.iter().map(|a| a * a).sum();
            let proj = if norm2 > 0.0 {
                pred.iter().zip(&adv).map(|(gp, ga)| gp * ga).sum::<f64>() / norm2
            } else {
                0.0
            };
            for (k, (gp, ga)) in pred.iter().zip(&adv).enumerate() {
                let step = lr * (gp - proj * ga - config.alpha * ga);
                if k < w.len() {
                    w[k] -= step;
                } else {
                    b -= step;
                }
            }
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) || !c.is_finite() || !d.is_finite() {
            return Err(Error::Divergence {
                component: if c.is_finite() && d.is_finite() { "predictor" } else { "adversary" }.into(),
                epoch,
            });
        }
    }

    Ok(Model {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::AdversarialDebiased,
        feature_subset: train.feature_names().to_vec(),
        parameters: Parameters::Linear(objective.into_weights(w, b)),
        training: TrainingInfo {
            hyperparams: Hyperparams::Logistic(LogisticHyperparams {
                learning_rate: lr,
                epochs: config.epochs,
                l2_penalty: config.predictor.l2_penalty,
                seed: config.seed,
            }),
            lambda: None,
            decision_threshold: None,
            alpha: Some(config.alpha),
            curve: Some(curve),
        },
    })
}

/// Accuracy of a freshly trained logistic classifier predicting protected
/// membership from `scores` alone. Equals the majority-group share when the
/// scores carry no group signal.
pub fn leakage_from_scores(scores: &[f64], groups: &GroupLabels) -> Result<f64> {
    if scores.len() != groups.len() {
        return Err(Error::LengthMismatch {
            expected: groups.len(),
            found: scores.len(),
        });
    }
    groups.require_both()?;
    let target: Vec<u8> = groups
        .as_slice()
        .iter()
        .map(|&g| (g == Group::Protected) as u8)
        .collect();
    let probe = Dataset::new(
        vec!["score".into()],
        vec![scores.to_vec()],
        target.clone(),
        (0..scores.len()).map(|i| i.to_string()).collect(),
    )?;
    let adversary = fit_logistic(&probe, &LogisticHyperparams::default())?;
    let guesses = adversary.predict(&probe)?;
    let hits = guesses
        .as_slice()
        .iter()
        .zip(&target)
        .filter(|(&q, &t)| (q >= 0.5) == (t == 1))
        .count();
    Ok(hits as f64 / scores.len() as f64)
}

pub fn adversary_leakage(model: &Model, dataset: &Dataset, groups: &GroupLabels) -> Result<f64> {
    groups.check_linked(dataset)?;
    let scores = model.predict(dataset)?;
    leakage_from_scores(scores.as_slice(), groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Group::{Control as C, Protected as P};

    #[test]
    fn constant_scores_leak_nothing() {
        let g = GroupLabels::new(vec![P, P, P, C, C, C, C, C, C, C]);
        assert!((leakage_from_scores(&[0.3; 10], &g).unwrap() - 0.7).abs() < 1e-15);
        let g = GroupLabels::new(vec![P, P, P, P, P, P, C, C]);
        assert!((leakage_from_scores(&[0.3; 8], &g).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn group_indicator_scores_leak_everything() {
        let groups: Vec<Group> = (0..40).map(|i| if i % 3 == 0 { P } else { C }).collect();
        let scores: Vec<f64> = groups
            .iter()
            .enumerate()
            .map(|(i, &g)| if g == P { 0.9 } else { 0.1 } + if i % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        let acc = leakage_from_scores(&scores, &GroupLabels::new(groups)).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn leakage_needs_both_groups() {
        let g = GroupLabels::new(vec![P, P]);
        assert!(leakage_from_scores(&[0.1, 0.2], &g).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AdversarialConfig { alpha: -0.1, ..Default::default() }.validate().is_err());
        assert!(AdversarialConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(AdversarialConfig::default().validate().is_ok());
    }
}
