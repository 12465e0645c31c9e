//! Acceptance suite: one test per criterion. Each writes a single
//! `ACCEPTANCE <n> PASS|FAIL` line to stderr (bypassing output capture) and
//! then asserts.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::collections::BTreeSet;
use std::io::Write as _;
use std::time::{Duration, Instant};

use fairscope_core::data::{generate_scenario, split, Dataset, Group, GroupLabels, ScenarioConfig, PROXY_FEATURE};
use fairscope_core::learners::{fit_logistic, fit_tree, LogLossObjective, LogisticHyperparams, TreeHyperparams};
use fairscope_core::lda::{fit_baseline, pareto_indices, search_alternatives, SearchConfig, Strategy, StrategyTag};
use fairscope_core::metrics::{impossibility_search, FairnessReport, RiskScores};
use fairscope_core::mitigate::{
    adversary_leakage, evaluate_split, fit_adversarial, fit_fair_tree, AdversarialConfig, RegularizationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, title: &str, pass: bool, detail: &str, elapsed: Duration) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "ACCEPTANCE {n} {status}: {title} [{detail}] ({:.2}s)",
        elapsed.as_secs_f64()
    );
    assert!(pass, "criterion {n} failed: {detail}");
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn criterion_1_worked_cutoff_example() {
    let t0 = Instant::now();
    let (ds, g) = common::cutoff_fixture();
    let at600 = evaluate_split(&ds, &g, "credit_score", 600.0, 0.5).unwrap();
    let at700 = evaluate_split(&ds, &g, "credit_score", 700.0, 0.5).unwrap();
    let stump = TreeHyperparams {
        max_depth: 1,
        min_leaf_size: 1,
        ..Default::default()
    };
    let pick = |lambda: f64| {
        let reg = RegularizationConfig {
            lambda,
            decision_threshold: 0.5,
        };
        fit_fair_tree(&ds, &g, &reg, &stump).unwrap().tree().unwrap().splits()
    };
    let (p0, p1) = (pick(0.0), pick(1.0));
    let elapsed = t0.elapsed();

    let (a6, r6) = (at600.accuracy, at600.air.unwrap());
    let (a7, r7) = (at700.accuracy, at700.air.unwrap());
    let pass = (a6 - 0.75).abs() <= 0.005
        && (r6 - 0.65).abs() <= 0.01
        && (a7 - 0.73).abs() <= 0.005
        && (r7 - 0.79).abs() <= 0.01
        && p0 == vec![(0, 600.0)]
        && p1 == vec![(0, 700.0)]
        && elapsed < Duration::from_secs(1);
    verdict(
        1,
        "cutoff fixture accuracy/AIR and fair-tree cutoff choice",
        pass,
        &format!("600: ({a6:.4}, {r6:.4}); 700: ({a7:.4}, {r7:.4}); lambda=0 -> {p0:?}; lambda=1 -> {p1:?}"),
        elapsed,
    );
}

/// (protected size, control size, mixed layout, which defaults pairs to keep)
type Family = (usize, usize, bool, fn(usize, usize) -> bool);

/// One group's outcomes (defaulters first) and feature cells.
fn group_instance(n: usize, d: usize, mixed: bool) -> (Vec<u8>, Vec<usize>) {
    let y = (0..n).map(|i| (i < d) as u8).collect();
    let cells = (0..n).map(|i| if mixed { i % 2 } else { (i >= d) as usize }).collect();
    (y, cells)
}

#[test]
fn criterion_2_impossibility_at_desk_scale() {
    let t0 = Instant::now();
    const Q: usize = 20;
    // group sizes chosen so any equal base rate is a multiple of 1/Q
    let families: [Family; 6] = [
        (4, 4, false, |_, _| true),
        (4, 4, true, |_, _| true),
        (5, 5, true, |_, _| true),
        (8, 8, true, |a, b| a % 2 == 0 && b % 2 == 0),
        (4, 8, true, |_, _| true),
        (5, 8, true, |_, _| true),
    ];
    let mut combos = BTreeSet::new();
    let (mut instances, mut witnesses, mut mismatches) = (0usize, 0usize, Vec::new());
    for (np, nc, mixed, keep) in families {
        for dp in 0..=np {
            for dc in 0..=nc {
                if !keep(dp, dc) {
                    continue;
                }
                let (yp, cp) = group_instance(np, dp, mixed);
                let (yc, cc) = group_instance(nc, dc, mixed);
                let y = [yp, yc].concat();
                let cells = [cp, cc].concat();
                let g: Vec<Group> = [vec![Group::Protected; np], vec![Group::Control; nc]].concat();

                let pure = (0..y.len()).all(|i| (0..y.len()).all(|j| g[i] != g[j] || cells[i] != cells[j] || y[i] == y[j]));
                let equal = dp * nc == dc * np;
                let expected = pure || equal;

                let w = impossibility_search(&y, &GroupLabels::new(g.clone()), &cells, Q, 1e-9).unwrap();
                let found = w.is_some();
                let valid = w.as_ref().is_none_or(|w| common::three_conditions_hold(w.as_slice(), &y, &g, 1e-9));
                if found != expected || !valid {
                    mismatches.push(format!("{np}x{nc} mixed={mixed} d=({dp},{dc})"));
                }
                instances += 1;
                witnesses += found as usize;
                combos.insert((dp * 40 / np, dc * 40 / nc));
            }
        }
    }
    let elapsed = t0.elapsed();
    let pass = mismatches.is_empty() && combos.len() >= 25 && elapsed < Duration::from_secs(60);
    verdict(
        2,
        "witnesses exactly for equal base rates or perfect prediction (q=20, tol 1e-9)",
        pass,
        &format!(
            "{instances} instances, {} distinct base-rate pairs, {witnesses} witnesses, mismatches {mismatches:?}",
            combos.len()
        ),
        elapsed,
    );
}

fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}

#[test]
fn criterion_3_metrics_match_naive_oracles() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    for case in 0..200 {
        let n = rng.random_range(2..=50);
        let mut g: Vec<Group> = (0..n)
            .map(|_| if rng.random_bool(0.5) { Group::Protected } else { Group::Control })
            .collect();
        g[0] = Group::Protected;
        g[1] = Group::Control;
        // half the cases use a coarse grid so scores hit thresholds and bin edges
        let coarse = case % 2 == 0;
        let s: Vec<f64> = (0..n)
            .map(|_| if coarse { rng.random_range(0..=20) as f64 / 20.0 } else { rng.random::<f64>() })
            .collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_bool(0.3) as u8).collect();
        let t = if coarse { rng.random_range(1..20) as f64 / 20.0 } else { rng.random_range(0.05..0.95) };
        let n_bins = rng.random_range(1..=12);

        let r = FairnessReport::evaluate(&RiskScores::new(s.clone()).unwrap(), &y, &GroupLabels::new(g.clone()), t, n_bins)
            .unwrap();
        let approved = common::approvals(&s, t);
        let conf = common::confusion(&approved, &y, &g);
        let lib_conf = [&r.per_group_confusion.protected, &r.per_group_confusion.control].map(|c| [c.tp, c.fp, c.tn, c.fn_]);
        let counts = common::calibration_counts(&s, &y, &g, n_bins);
        let lib_counts: Vec<(usize, usize, usize, usize)> = r
            .calibration
            .bins
            .iter()
            .map(|b| (b.protected.count, b.protected.defaults, b.control.count, b.control.defaults))
            .collect();

        let ok = lib_conf == conf
            && close(r.air, common::air(&approved, &g), 1e-12)
            && (r.statistical_parity_gap - common::parity(&approved, &g)).abs() <= 1e-12
            && lib_counts == counts
            && close(r.calibration.max_gap, common::calibration_max_gap(&counts), 1e-12)
            && close(r.balance_negative_gap, common::balance_gap(&s, &y, &g, 0), 1e-12)
            && close(r.balance_positive_gap, common::balance_gap(&s, &y, &g, 1), 1e-12);
        if !ok {
            failures.push(case);
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        3,
        "AIR, parity, calibration, balance and confusion equal naive recomputation (1e-12)",
        failures.is_empty(),
        &format!("200 instances, failing cases {failures:?}"),
        elapsed,
    );
}

#[test]
fn criterion_4_reduction_identities() {
    let t0 = Instant::now();
    let mut tree_mismatch = Vec::new();
    let mut max_dev = 0.0f64;
    for seed in 0..3 {
        let (ds, g) = generate_scenario(&ScenarioConfig {
            n_rows: 1500,
            seed,
            ..Default::default()
        })
        .unwrap();
        for (t, depth) in [(0.3, 2), (0.5, 3), (0.7, 4)] {
            let hp = TreeHyperparams {
                max_depth: depth,
                seed,
                ..Default::default()
            };
            let reg = RegularizationConfig {
                lambda: 0.0,
                decision_threshold: t,
            };
            let fair = fit_fair_tree(&ds, &g, &reg, &hp).unwrap().parameters_json().unwrap();
            let plain = fit_tree(&ds, &hp).unwrap().parameters_json().unwrap();
            if fair != plain {
                tree_mismatch.push((seed, t));
            }
        }
        for l2 in [0.0, 0.05] {
            let hp = LogisticHyperparams {
                l2_penalty: l2,
                seed,
                ..Default::default()
            };
            let plain = fit_logistic(&ds, &hp).unwrap();
            let adv = fit_adversarial(&ds, &g, &AdversarialConfig::matching(&hp, 0.0)).unwrap();
            let (a, b) = (plain.linear().unwrap(), adv.linear().unwrap());
            for (x, y) in a.weights.iter().chain([&a.intercept]).zip(b.weights.iter().chain([&b.intercept])) {
                max_dev = max_dev.max((x - y).abs());
            }
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        4,
        "lambda=0 fair tree byte-identical to plain tree; alpha=0 weights equal plain logistic",
        tree_mismatch.is_empty() && max_dev <= 1e-9,
        &format!("tree mismatches {tree_mismatch:?}; max |w_alpha0 - w_plain| = {max_dev:e}"),
        elapsed,
    );
}

#[test]
fn criterion_5_adversarial_debiasing_efficacy() {
    let t0 = Instant::now();
    let hp = LogisticHyperparams::default();
    let (mut air_base, mut air_adv, mut acc_base, mut acc_adv) = (vec![], vec![], vec![], vec![]);
    let mut leak_lower = 0;
    let mut per_seed = Vec::new();
    for seed in 0..5u64 {
        let (ds, g) = generate_scenario(&ScenarioConfig {
            n_rows: 5000,
            base_rate_protected: 0.25,
            base_rate_control: 0.15,
            proxy_correlation: 0.8,
            seed,
            ..Default::default()
        })
        .unwrap();
        let (tr, te) = split(&ds, &g, 0.7, seed).unwrap();
        let eval = |m: &fairscope_core::learners::Model| {
            let s = m.predict(&te.data).unwrap();
            FairnessReport::evaluate(&s, te.data.outcome(), &te.groups, 0.5, 10).unwrap()
        };
        let base = fit_logistic(&tr.data, &hp).unwrap();
        let zero = fit_adversarial(&tr.data, &tr.groups, &AdversarialConfig::matching(&hp, 0.0)).unwrap();
        let adv = fit_adversarial(&tr.data, &tr.groups, &AdversarialConfig::matching(&hp, 2.0)).unwrap();
        let (rb, ra) = (eval(&base), eval(&adv));
        air_base.push(rb.air.unwrap_or(0.0));
        air_adv.push(ra.air.unwrap_or(0.0));
        acc_base.push(rb.accuracy);
        acc_adv.push(ra.accuracy);
        let l0 = adversary_leakage(&zero, &te.data, &te.groups).unwrap();
        let l2 = adversary_leakage(&adv, &te.data, &te.groups).unwrap();
        leak_lower += (l2 < l0) as usize;
        per_seed.push(format!("{seed}: air {:.3}->{:.3} leak {l0:.3}->{l2:.3}", air_base[seed as usize], air_adv[seed as usize]));
    }
    let gain = median(air_adv) - median(air_base);
    let loss = median(acc_base) - median(acc_adv);
    let elapsed = t0.elapsed();
    let pass = gain >= 0.05 && loss <= 0.05 && leak_lower >= 4 && elapsed < Duration::from_secs(120);
    verdict(
        5,
        "alpha=2 debiasing: median AIR gain >= 0.05, accuracy loss <= 0.05, leakage lower in >= 4/5",
        pass,
        &format!(
            "median AIR gain {gain:.4}, median accuracy loss {loss:.4}, leakage lower in {leak_lower}/5; {}",
            per_seed.join("; ")
        ),
        elapsed,
    );
}

#[test]
fn criterion_6_lda_search_sanity() {
    let t0 = Instant::now();
    let cfg = SearchConfig {
        strategies: vec![Strategy::DropOne],
        ..Default::default()
    };
    let mut hits = 0;
    let mut per_seed = Vec::new();
    for seed in 0..5u64 {
        let (ds, g) = generate_scenario(&ScenarioConfig {
            n_rows: 5000,
            seed,
            ..Default::default()
        })
        .unwrap();
        let (tr, te) = split(&ds, &g, 0.7, seed).unwrap();
        let base = fit_baseline(&tr, &te, &cfg).unwrap();
        let out = search_alternatives(&base, &tr, &te, &cfg).unwrap();
        let base_air = base.air.unwrap_or(0.0);
        let best = out
            .candidates
            .iter()
            .filter(|c| c.air.unwrap_or(0.0) > base_air)
            .max_by(|a, b| a.air.unwrap_or(0.0).total_cmp(&b.air.unwrap_or(0.0)));
        let found = best.is_some_and(|b| b.tag == StrategyTag::Drop(PROXY_FEATURE.into()));
        hits += found as usize;
        per_seed.push(format!("{seed}: {}", best.map_or("none".to_string(), |b| b.tag.to_string())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut frontier_mismatch = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..60);
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(0..12) as f64 / 12.0, rng.random_range(0..12) as f64 / 8.0))
            .collect();
        let mut lib = pareto_indices(&pts);
        lib.sort_unstable();
        if lib != common::nondominated(&pts) {
            frontier_mismatch += 1;
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        6,
        "drop-one finds the proxy in >= 4/5 seeds; frontier equals brute force on 100 sets",
        hits >= 4 && frontier_mismatch == 0,
        &format!("proxy best in {hits}/5 ({}); frontier mismatches {frontier_mismatch}/100", per_seed.join(", ")),
        elapsed,
    );
}

fn gradient_fixture() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 20;
    let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let y: Vec<u8> = (0..n).map(|i| ((cols[0][i] - cols[2][i] + rng.random_range(-1.0..1.0)) > 0.0) as u8).collect();
    Dataset::new(
        (0..4).map(|j| format!("x{j}")).collect(),
        cols,
        y,
        (0..n).map(|i| format!("r{i}")).collect(),
    )
    .unwrap()
}

#[test]
fn criterion_7_gradient_matches_finite_differences() {
    let t0 = Instant::now();
    let ds = gradient_fixture();
    let l2 = 0.05;
    let obj = LogLossObjective::new(&ds, l2);
    let cols: Vec<Vec<f64>> = (0..ds.n_features()).map(|j| obj.standardized_column(j).to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let w: Vec<f64> = (0..cols.len()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);
        let (gw, gb) = obj.gradient(&w, b);
        let h = 1e-5;
        for j in 0..=cols.len() {
            let loss_at = |d: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if j < cols.len() {
                    w2[j] += d;
                } else {
                    b2 += d;
                }
                common::log_loss(&cols, obj.targets(), &w2, b2, l2)
            };
            let fd = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            let an = if j < cols.len() { gw[j] } else { gb };
            worst = worst.max((fd - an).abs() / an.abs().max(1e-3));
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        7,
        "logistic gradient vs central differences on a 20-row fixture",
        worst <= 1e-6,
        &format!("10 weight vectors, max relative error {worst:e}"),
        elapsed,
    );
}

#[test]
fn criterion_8_end_to_end_determinism_and_exit_codes() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = support::run(d, "a", &["search"], support::PROXY_SCENARIO);
    let second = support::run(d, "b", &["search"], support::PROXY_SCENARIO);
    let identical = first.read("report.json") == second.read("report.json")
        && first.read("frontier.csv") == second.read("frontier.csv")
        && first.read("model.json") == second.read("model.json");

    let none = support::run(d, "none", &["search"], support::NO_IMPACT_SCENARIO);
    let strict = format!(r#"{}, "min_air_gain": 0.5"#, support::PROXY_SCENARIO);
    let without = support::run(d, "without", &["search"], &strict);
    let codes = (none.code, first.code, without.code);
    let without_verdict = without.json("report.json")["verdict"].clone();
    let elapsed = t0.elapsed();
    verdict(
        8,
        "search report.json byte-identical across runs; exit codes 0/2/3",
        identical && codes == (0, 2, 3) && without_verdict == "impact_without_lda",
        &format!(
            "identical outputs: {identical}; exit codes (no impact, impact with LDA, impact without LDA) = {codes:?}"
        ),
        elapsed,
    );
}
