use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Group, GroupLabels};
use crate::error::{Error, Result};

/// Name of the generated feature that encodes group membership.
pub const PROXY_FEATURE: &str = "proxy";

const SIGNAL_WEIGHTS: [f64; 2] = [1.5, 1.0];

/// Parameters of a synthetic credit population.
///
/// All values are artifact choices; nothing here is calibrated to a real portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_rows: usize,
    pub base_rate_protected: f64,
    pub base_rate_control: f64,
    pub protected_fraction: f64,
    /// Target point-biserial correlation between the proxy feature and
    /// protected-group membership.
    pub proxy_correlation: f64,
    pub n_noise_features: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_rows: 5000,
            base_rate_protected: 0.25,
            base_rate_control: 0.15,
            protected_fraction: 0.5,
            proxy_correlation: 0.8,
            n_noise_features: 3,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("base_rate_protected", self.base_rate_protected),
            ("base_rate_control", self.base_rate_control),
            ("protected_fraction", self.protected_fraction),
            ("proxy_correlation", self.proxy_correlation),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.n_rows < 10 {
            return Err(Error::InvalidConfig(format!(
                "n_rows must be at least 10, got {}",
                self.n_rows
            )));
        }
        if self.protected_fraction == 0.0 || self.protected_fraction == 1.0 {
            return Err(Error::InvalidConfig(
                "protected_fraction of 0 or 1 yields a single-group sample".into(),
            ));
        }
        Ok(())
    }

    /// Mixing weight `a` in `proxy = a * 1[protected] + (1 - a) * noise`.
    ///
    /// With unit-variance noise and group standard deviation `s`, the
    /// population correlation is `a s / sqrt(a^2 s^2 + (1 - a)^2)`; solving for
    /// the requested correlation gives the expression below, which is
    /// increasing in `proxy_correlation`.
    pub fn proxy_weight(&self) -> f64 {
        let rho = self.proxy_correlation;
        if rho == 0.0 {
            return 0.0;
        }
        let s = (self.protected_fraction * (1.0 - self.protected_fraction)).sqrt();
        rho / (rho + s * (1.0 - rho * rho).sqrt())
    }
}

/// Draws a synthetic population.
///
/// Features: `signal_1`, `signal_2` (standard normal, drive default),
/// [`PROXY_FEATURE`] (encodes group membership only) and `noise_k`.
/// Default is decided by a latent logistic index `1.5 s1 + 1.0 s2 + e`
/// (`e` standard logistic): within each group exactly
/// `round(base_rate * n_group)` rows with the highest index default. That is
/// the same as thresholding the index at a group-specific intercept chosen to
/// hit the requested base rate.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<(Dataset, GroupLabels)> {
    config.validate()?;
    let n = config.n_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let a = config.proxy_weight();

    let n_features = 3 + config.n_noise_features;
    let mut columns = vec![Vec::with_capacity(n); n_features];
    let mut groups = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);

    for _ in 0..n {
        let protected = rng.random::<f64>() < config.protected_fraction;
        let g = if protected { 1.0 } else { 0.0 };
        groups.push(if protected { Group::Protected } else { Group::Control });
        let s1: f64 = rng.sample(StandardNormal);
        let s2: f64 = rng.sample(StandardNormal);
        let proxy_noise: f64 = rng.sample(StandardNormal);
        columns[0].push(s1);
        columns[1].push(s2);
        columns[2].push(a * g + (1.0 - a) * proxy_noise);
        for col in columns.iter_mut().skip(3) {
            col.push(rng.sample(StandardNormal));
        }
        // open interval keeps the logistic draw finite
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let eps = (u / (1.0 - u)).ln();
        latent.push(SIGNAL_WEIGHTS[0] * s1 + SIGNAL_WEIGHTS[1] * s2 + eps);
    }

    let mut outcome = vec![0u8; n];
    for (group, rate) in [
        (Group::Protected, config.base_rate_protected),
        (Group::Control, config.base_rate_control),
    ] {
        let mut rows: Vec<usize> = (0..n).filter(|&i| groups[i] == group).collect();
        if rows.is_empty() {
            return Err(Error::SingleGroup);
        }
        let k = (rate * rows.len() as f64).round() as usize;
        rows.sort_by(|&i, &j| latent[j].total_cmp(&latent[i]).then(i.cmp(&j)));
        for &i in rows.iter().take(k) {
            outcome[i] = 1;
        }
    }

    let mut names = vec!["signal_1".to_string(), "signal_2".to_string(), PROXY_FEATURE.to_string()];
    names.extend((1..=config.n_noise_features).map(|k| format!("noise_{k}")));
    let width = n.to_string().len();
    let row_ids = (1..=n).map(|i| format!("s{i:0width$}")).collect();

    let dataset = Dataset::new(names, columns, outcome, row_ids)?;
    let labels = GroupLabels::for_dataset(&dataset, groups)?;
    Ok((dataset, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;

    fn group_rates(ds: &Dataset, labels: &GroupLabels) -> (f64, f64) {
        let mut counts = [(0usize, 0usize); 2];
        for (&y, &g) in ds.outcome().iter().zip(labels.as_slice()) {
            let c = &mut counts[(g == Group::Control) as usize];
            c.0 += y as usize;
            c.1 += 1;
        }
        (
            counts[0].0 as f64 / counts[0].1 as f64,
            counts[1].0 as f64 / counts[1].1 as f64,
        )
    }

    #[test]
    fn equal_base_rates_by_symmetry() {
        let cfg = ScenarioConfig {
            n_rows: 10_000,
            base_rate_protected: 0.1,
            base_rate_control: 0.1,
            seed: 7,
            ..Default::default()
        };
        let (ds, labels) = generate_scenario(&cfg).unwrap();
        let (p, c) = group_rates(&ds, &labels);
        assert!((p - c).abs() <= 0.02, "{p} vs {c}");
    }

    #[test]
    fn unequal_base_rates_by_direct_count() {
        let cfg = ScenarioConfig {
            n_rows: 5000,
            base_rate_protected: 0.25,
            base_rate_control: 0.15,
            seed: 1,
            ..Default::default()
        };
        let (ds, labels) = generate_scenario(&cfg).unwrap();
        let (p, c) = group_rates(&ds, &labels);
        assert!((p - 0.25).abs() <= 0.02, "{p}");
        assert!((c - 0.15).abs() <= 0.02, "{c}");
    }

    #[test]
    fn base_rate_error_within_bound_and_shrinks() {
        let mut errs = Vec::new();
        for n in [100, 10_000] {
            let cfg = ScenarioConfig {
                n_rows: n,
                base_rate_protected: 0.3,
                base_rate_control: 0.1,
                seed: 3,
                ..Default::default()
            };
            let (ds, labels) = generate_scenario(&cfg).unwrap();
            let (p, c) = group_rates(&ds, &labels);
            let err = (p - 0.3).abs().max((c - 0.1).abs());
            assert!(err <= 3.0 / (n as f64).sqrt());
            errs.push(err);
        }
        assert!(errs[1] < errs[0]);
    }

    #[test]
    fn zero_proxy_correlation_is_uncorrelated() {
        let cfg = ScenarioConfig {
            n_rows: 10_000,
            proxy_correlation: 0.0,
            seed: 11,
            ..Default::default()
        };
        let (ds, labels) = generate_scenario(&cfg).unwrap();
        let r = pearson(ds.column(PROXY_FEATURE).unwrap(), &labels.indicator()).unwrap();
        assert!(r.abs() <= 0.05, "{r}");
    }

    #[test]
    fn proxy_correlation_is_monotone_in_setting() {
        let mut prev = f64::NEG_INFINITY;
        for rho in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95] {
            let cfg = ScenarioConfig {
                n_rows: 4000,
                proxy_correlation: rho,
                seed: 5,
                ..Default::default()
            };
            let (ds, labels) = generate_scenario(&cfg).unwrap();
            let r = pearson(ds.column(PROXY_FEATURE).unwrap(), &labels.indicator()).unwrap();
            assert!(r > prev, "rho={rho}: {r} <= {prev}");
            assert!((r - rho).abs() < 0.05, "rho={rho}: {r}");
            prev = r;
        }
    }

    #[test]
    fn identical_seeds_identical_output() {
        let cfg = ScenarioConfig {
            n_rows: 500,
            seed: 99,
            ..Default::default()
        };
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&ScenarioConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn degenerate_configs_are_rejected() {
        for frac in [0.0, 1.0] {
            let cfg = ScenarioConfig {
                protected_fraction: frac,
                ..Default::default()
            };
            assert!(matches!(generate_scenario(&cfg), Err(Error::InvalidConfig(_))));
        }
        let cfg = ScenarioConfig {
            n_rows: 9,
            ..Default::default()
        };
        assert!(generate_scenario(&cfg).is_err());
        let cfg = ScenarioConfig {
            base_rate_control: 1.5,
            ..Default::default()
        };
        assert!(generate_scenario(&cfg).is_err());
        // tiny fraction on a tiny sample: no protected rows drawn
        let cfg = ScenarioConfig {
            n_rows: 10,
            protected_fraction: 1e-9,
            ..Default::default()
        };
        assert!(matches!(generate_scenario(&cfg), Err(Error::SingleGroup)));
    }
}
