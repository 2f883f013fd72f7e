//! End-to-end acceptance gate.
//!
//! Each test prints one pass line with its measured numbers (visible with
//! `--nocapture`); cargo's own per-test status gives the pass/fail summary.
//! Benchmarks compare against values registered from a prior run of the
//! identical protocol (same generators, seeds and split counts), so reruns
//! are deterministic; the tolerance bands allow only for numeric drift across
//! toolchains, never for protocol changes.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fairrr::calibrate::{calibrate_t, evaluate_disparity_at, CalibrationConfig};
use fairrr::data::{split, synthesize, synthetic_preset, Dataset};
use fairrr::harness::{
    run_bench, run_sweep, BenchmarkReport, CalibrationSettings, DatasetSource, RunConfig,
    TrainSettings, ARM_FAIRRR, ARM_FAIR_SAMPLING, ARM_ORIGINAL,
};
use fairrr::mechanism::{
    constraint_residuals, estimate_group_probs, feasible_bracket, perturb, perturbed_posterior,
    retention_objective, solve_design_matrix, t_transform, DesignMatrix, FairnessMetric,
    GroupProbabilities,
};
use fairrr::metrics::disparity;
use fairrr::model::{predict, train, TrainConfig};

// Registered benchmark values: produced by running the exact protocols below
// once and freezing the aggregate results. The benchmark configs are fully
// seeded, so a healthy build reproduces these numbers exactly.
const INCOME_BASELINE_ACCURACY: f64 = 0.8391;
const INCOME_BASELINE_DDP: f64 = 0.1927;
const INCOME_FAIR_ACCURACY_FLOOR: f64 = 0.807;
const RECIDIVISM_FAIR_ACCURACY_FLOOR: f64 = 0.62;
const ACCURACY_TOLERANCE: f64 = 0.015;
const DISPARITY_TOLERANCE: f64 = 0.03;
const SWEEP_TRACKING_TOLERANCE: f64 = 0.015;
const SWEEP_DELTAS: [f64; 5] = [0.0, 0.04, 0.08, 0.12, 0.16];

fn sample_probs(rng: &mut ChaCha8Rng) -> GroupProbabilities {
    let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
    let sum: f64 = raw.iter().sum();
    GroupProbabilities::new(raw[0] / sum, raw[1] / sum, raw[2] / sum, raw[3] / sum).unwrap()
}

fn sample_t(rng: &mut ChaCha8Rng, metric: FairnessMetric, p: &GroupProbabilities) -> f64 {
    let (lo, hi) = feasible_bracket(metric, p);
    lo + rng.random::<f64>() * (hi - lo)
}

#[test]
fn a01_closed_form_satisfies_constraints_exactly() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for metric in FairnessMetric::ALL {
        for _ in 0..1000 {
            let p = sample_probs(&mut rng);
            let t = sample_t(&mut rng, metric, &p);
            let dm = solve_design_matrix(metric, &p, t).unwrap();
            for theta in [dm.theta11, dm.theta10, dm.theta01, dm.theta00] {
                assert!((0.5..=1.0).contains(&theta), "{metric}: theta {theta} at t={t}");
            }
            let (r1, r0) = constraint_residuals(metric, &p, t, &dm);
            assert!(r1.abs() <= 1e-12, "{metric}: group-1 residual {r1:e} at t={t}");
            assert!(r0.abs() <= 1e-12, "{metric}: group-0 residual {r0:e} at t={t}");
            worst = worst.max(r1.abs()).max(r0.abs());
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("PASS a01: 3000 solves, worst residual {worst:.2e}, {elapsed:?}");
}

/// Best constrained retention for one group by brute force: sweep one
/// retention probability on a 1e-3 grid and solve the other from the (linear)
/// constraint, keeping pairs whose solved value lies in [1/2, 1] within 1e-6.
fn grid_best_for_group(metric: FairnessMetric, p: &GroupProbabilities, t: f64, group: u8) -> f64 {
    let residual = |x1: f64, x0: f64| -> f64 {
        let dm = if group == 1 {
            DesignMatrix::new(x1, x0, 1.0, 1.0)
        } else {
            DesignMatrix::new(1.0, 1.0, x1, x0)
        }
        .unwrap();
        let (r1, r0) = constraint_residuals(metric, p, t, &dm);
        if group == 1 {
            r1
        } else {
            r0
        }
    };
    // r(x1, x0) = alpha*x1 + beta*x0 + gamma
    let r00 = residual(0.5, 0.5);
    let alpha = (residual(1.0, 0.5) - r00) / 0.5;
    let beta = (residual(0.5, 1.0) - r00) / 0.5;
    let gamma = r00 - 0.5 * alpha - 0.5 * beta;
    let (w1, w0) = if group == 1 { (p.p11, p.p10) } else { (p.p01, p.p00) };

    let mut best = f64::NEG_INFINITY;
    let mut consider = |x1: f64, x0: f64| {
        let in_range = |x: f64| (0.5 - 1e-6..=1.0 + 1e-6).contains(&x);
        if in_range(x1) && in_range(x0) {
            best = best.max(w1 * x1 + w0 * x0);
        }
    };
    for k in 0..=500 {
        let grid = 0.5 + k as f64 * 1e-3;
        if beta.abs() > 1e-12 {
            consider(grid, -(gamma + alpha * grid) / beta);
        }
        if alpha.abs() > 1e-12 {
            consider(-(gamma + beta * grid) / alpha, grid);
        }
    }
    assert!(best.is_finite(), "{metric}: no feasible grid point for group {group} at t={t}");
    best
}

#[test]
fn a02_closed_form_beats_constrained_grid_search() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_gap = f64::NEG_INFINITY;
    for metric in FairnessMetric::ALL {
        for _ in 0..50 {
            let p = sample_probs(&mut rng);
            let t = sample_t(&mut rng, metric, &p);
            let dm = solve_design_matrix(metric, &p, t).unwrap();
            let closed = retention_objective(&p, &dm);
            let grid =
                grid_best_for_group(metric, &p, t, 1) + grid_best_for_group(metric, &p, t, 0);
            let gap = grid - closed;
            assert!(
                gap <= 2e-3,
                "{metric}: grid search beats the closed form by {gap:.2e} at t={t}"
            );
            worst_gap = worst_gap.max(gap);
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!("PASS a02: 150 instances, max grid-over-closed gap {worst_gap:.2e}, {elapsed:?}");
}

fn big_spec() -> fairrr::SyntheticSpec {
    fairrr::SyntheticSpec {
        pi_a: 0.5,
        mu_1: vec![0.6, 0.4],
        mu_0: vec![-0.6, -0.4],
        w: vec![1.0, 0.8],
        b: 0.0,
        c_1: 0.3,
        c_0: -0.3,
        n: 100_000,
        seed: 7_700_177,
    }
}

fn big_dataset() -> &'static Dataset {
    static BIG: OnceLock<Dataset> = OnceLock::new();
    BIG.get_or_init(|| synthesize(&big_spec()).unwrap())
}

#[test]
fn a03_perturbed_posterior_matches_adjusted_thresholds() {
    let started = Instant::now();
    let ds = big_dataset();
    let p = estimate_group_probs(ds.labels(), ds.sensitive()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut checked = 0usize;
    for metric in FairnessMetric::ALL {
        for _ in 0..20 {
            let t = sample_t(&mut rng, metric, &p);
            let dm = solve_design_matrix(metric, &p, t).unwrap();
            let (t1, t0) = t_transform(metric, &p, t).unwrap();
            for (a, threshold) in [(1u8, (1.0 + t1) / 2.0), (0u8, (1.0 - t0) / 2.0)] {
                for k in 0..=1000 {
                    let eta = k as f64 / 1000.0;
                    if (eta - threshold).abs() < 1e-12 {
                        continue; // exact tie: both strict comparisons are vacuous
                    }
                    let flipped_side = perturbed_posterior(eta, a, &dm) > 0.5;
                    let threshold_side = eta > threshold;
                    assert_eq!(
                        flipped_side, threshold_side,
                        "{metric}: disagreement at eta={eta}, a={a}, t={t}"
                    );
                    checked += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("PASS a03: {checked} grid comparisons, zero sign disagreements, {elapsed:?}");
}

#[test]
fn a04_zero_strength_is_identity_and_generous_targets_stop_at_zero() {
    let spec = fairrr::SyntheticSpec { n: 3000, seed: 40_404, ..big_spec() };
    let ds = synthesize(&spec).unwrap();
    let p = estimate_group_probs(ds.labels(), ds.sensitive()).unwrap();
    for metric in FairnessMetric::ALL {
        let dm = solve_design_matrix(metric, &p, 0.0).unwrap();
        assert_eq!(dm, DesignMatrix::identity(), "{metric}: t=0 must be the identity");
        let out = perturb(ds.labels(), ds.sensitive(), &dm, 99).unwrap();
        assert_eq!(&out, ds.labels(), "{metric}: identity mechanism changed labels");

        let cfg = CalibrationConfig { target_delta: 1.0, base_seed: 7, ..Default::default() };
        let res = calibrate_t(&ds, metric, &cfg).unwrap();
        assert_eq!(res.t_star, 0.0, "{metric}: generous target must stop at t=0");
        assert!(res.converged);
        assert_eq!(res.iterations.len(), 1);
    }
    println!("PASS a04: identity at t=0 and t*=0 for satisfied targets, all metrics");
}

#[test]
fn a05_flip_counts_match_binomial_three_sigma() {
    let spec = fairrr::SyntheticSpec { n: 4000, seed: 50_505, ..big_spec() };
    let ds = synthesize(&spec).unwrap();
    let p = estimate_group_probs(ds.labels(), ds.sensitive()).unwrap();
    let [n11, n10, n01, n00] = ds.cell_counts();
    let cells = [n11, n10, n01, n00];

    let (lo, hi) = feasible_bracket(FairnessMetric::DemographicParity, &p);
    for (dir, t) in [("down", 0.4 * hi), ("up", 0.4 * lo)] {
        let dm = solve_design_matrix(FairnessMetric::DemographicParity, &p, t).unwrap();
        let thetas = [dm.theta11, dm.theta10, dm.theta01, dm.theta00];
        let mut within = [0usize; 4];
        for trial in 0..1000u64 {
            let out = perturb(ds.labels(), ds.sensitive(), &dm, 1_000_000 + trial).unwrap();
            let mut flips = [0usize; 4];
            for ((&y, &z), &a) in ds.labels().iter().zip(&out).zip(ds.sensitive()) {
                if y != z {
                    let cell = if a == 1 { 1 - y } else { 3 - y } as usize;
                    flips[cell] += 1;
                }
            }
            for c in 0..4 {
                let q = 1.0 - thetas[c];
                let mean = cells[c] as f64 * q;
                let sigma = (cells[c] as f64 * q * (1.0 - q)).sqrt();
                if (flips[c] as f64 - mean).abs() <= 3.0 * sigma {
                    within[c] += 1;
                }
            }
        }
        for (c, &hits) in within.iter().enumerate() {
            assert!(
                hits >= 990,
                "direction {dir}: cell {c} within 3 sigma only {hits} / 1000 times"
            );
        }
        println!("PASS a05 ({dir}, t={t:+.3}): per-cell 3-sigma coverage {within:?} / 1000");
    }
}

fn bisection_cfg(target_delta: f64) -> CalibrationConfig {
    CalibrationConfig {
        target_delta,
        base_seed: 606,
        train_config: TrainConfig { l2_strength: 1e-5, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn a06_bisection_lands_within_one_grid_cell_of_scan_crossing() {
    let started = Instant::now();
    let ds = big_dataset();
    let p = estimate_group_probs(ds.labels(), ds.sensitive()).unwrap();
    for metric in FairnessMetric::ALL {
        let (lo, hi) = feasible_bracket(metric, &p);
        let cell = (hi - lo) / 199.0;
        let d0 = evaluate_disparity_at(0.0, ds, metric, &bisection_cfg(0.0)).unwrap();
        let scan: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let t = lo + k as f64 * cell;
                let d = evaluate_disparity_at(t, ds, metric, &bisection_cfg(0.0)).unwrap();
                (t, d)
            })
            .collect();

        for delta in [0.0, d0.abs() / 2.0] {
            let target = d0.signum() * delta;
            let crossing = scan
                .windows(2)
                .find_map(|w| {
                    let (ta, da) = w[0];
                    let (tb, db) = w[1];
                    ((da - target) * (db - target) <= 0.0).then(|| {
                        if da == db {
                            0.5 * (ta + tb)
                        } else {
                            ta + (target - da) * (tb - ta) / (db - da)
                        }
                    })
                })
                .unwrap_or_else(|| panic!("{metric}: scan never crosses target {target}"));
            let res = calibrate_t(ds, metric, &bisection_cfg(delta)).unwrap();
            let gap = (res.t_star - crossing).abs();
            assert!(
                gap <= cell,
                "{metric} delta={delta:.4}: t*={} vs scan crossing {crossing} (gap {gap:.5}, cell {cell:.5})",
                res.t_star
            );
            println!(
                "PASS a06 {metric} delta={delta:.4}: |t* - crossing| = {gap:.5} <= cell {cell:.5}"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!("PASS a06: all metrics, both targets, {elapsed:?}");
}

fn fixture_bench_cfg(preset: &str) -> RunConfig {
    RunConfig {
        dataset: DatasetSource::Synthetic { synthetic: synthetic_preset(preset).unwrap() },
        metric: FairnessMetric::DemographicParity,
        target_delta: 0.0,
        n_splits: 100,
        train_fraction: 0.8,
        base_seed: 2026,
        calibration: CalibrationSettings::default(),
        train: TrainSettings::default(),
        baselines: vec![ARM_FAIR_SAMPLING.into()],
        sweep_deltas: vec![],
    }
}

fn income_bench() -> &'static BenchmarkReport {
    static REPORT: OnceLock<BenchmarkReport> = OnceLock::new();
    REPORT.get_or_init(|| run_bench(&fixture_bench_cfg("synth_income")).unwrap())
}

#[test]
fn a07_income_fixture_reproduces_registered_baseline() {
    let started = Instant::now();
    let report = income_bench();
    assert!(report.failures.is_empty(), "failed seeds: {:?}", report.failures);
    let original = report.arm(ARM_ORIGINAL).unwrap();
    let acc = original.accuracy.mean;
    let ddp = original.ddp.mean.abs();
    assert!(
        (acc - INCOME_BASELINE_ACCURACY).abs() <= ACCURACY_TOLERANCE,
        "accuracy {acc:.4} vs registered {INCOME_BASELINE_ACCURACY}"
    );
    assert!(
        (ddp - INCOME_BASELINE_DDP).abs() <= DISPARITY_TOLERANCE,
        "|DDP| {ddp:.4} vs registered {INCOME_BASELINE_DDP}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    println!(
        "PASS a07: income original arm accuracy {acc:.4} (registered {INCOME_BASELINE_ACCURACY}), \
         |DDP| {ddp:.4} (registered {INCOME_BASELINE_DDP}), {elapsed:?}"
    );
}

#[test]
fn a08_zero_target_fixture_benchmarks_reach_parity_without_accuracy_collapse() {
    let started = Instant::now();

    let income = *income_bench().arm(ARM_FAIRRR).unwrap();
    assert!(income.ddp.mean.abs() <= 0.03, "income |mean DDP| {:.4} > 0.03", income.ddp.mean.abs());
    assert!(
        income.accuracy.mean >= INCOME_FAIR_ACCURACY_FLOOR,
        "income accuracy {:.4} < {INCOME_FAIR_ACCURACY_FLOOR}",
        income.accuracy.mean
    );

    let recidivism = run_bench(&fixture_bench_cfg("synth_recidivism")).unwrap();
    assert!(recidivism.failures.is_empty());
    let recid = recidivism.arm(ARM_FAIRRR).unwrap();
    assert!(
        recid.ddp.mean.abs() <= 0.06,
        "recidivism |mean DDP| {:.4} > 0.06",
        recid.ddp.mean.abs()
    );
    assert!(
        recid.accuracy.mean >= RECIDIVISM_FAIR_ACCURACY_FLOOR,
        "recidivism accuracy {:.4} < {RECIDIVISM_FAIR_ACCURACY_FLOOR}",
        recid.accuracy.mean
    );

    let admissions = run_bench(&fixture_bench_cfg("synth_admissions")).unwrap();
    assert!(admissions.failures.is_empty());
    let adm = admissions.arm(ARM_FAIRRR).unwrap();
    assert!(adm.ddp.mean.abs() <= 0.02, "admissions |mean DDP| {:.4} > 0.02", adm.ddp.mean.abs());

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1800), "took {elapsed:?}");
    println!(
        "PASS a08: zero-target |mean DDP| income {:.4} (acc {:.4}), recidivism {:.4} (acc {:.4}), \
         admissions {:.4}, {elapsed:?}",
        income.ddp.mean.abs(),
        income.accuracy.mean,
        recid.ddp.mean.abs(),
        recid.accuracy.mean,
        adm.ddp.mean.abs()
    );
}

#[test]
fn a09_income_sweep_tracks_targets_with_nondecreasing_accuracy() {
    let started = Instant::now();
    let sweep = run_sweep(&fixture_bench_cfg("synth_income"), &SWEEP_DELTAS).unwrap();
    assert_eq!(sweep.failed_seeds, 0);
    assert_eq!(sweep.rows.len(), SWEEP_DELTAS.len());
    for row in &sweep.rows {
        let achieved = row.disparity_mean.abs();
        assert!(
            (achieved - row.delta).abs() <= SWEEP_TRACKING_TOLERANCE,
            "target {}: achieved |mean DDP| {achieved:.4} off by more than {SWEEP_TRACKING_TOLERANCE}",
            row.delta
        );
    }
    for pair in sweep.rows.windows(2) {
        assert!(
            pair[1].accuracy_mean >= pair[0].accuracy_mean - pair[0].accuracy_std,
            "accuracy fell from {:.4} (std {:.4}) to {:.4} between targets {} and {}",
            pair[0].accuracy_mean,
            pair[0].accuracy_std,
            pair[1].accuracy_mean,
            pair[0].delta,
            pair[1].delta
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1800), "took {elapsed:?}");
    let achieved: Vec<String> =
        sweep.rows.iter().map(|r| format!("{:.4}", r.disparity_mean.abs())).collect();
    let accs: Vec<String> = sweep.rows.iter().map(|r| format!("{:.4}", r.accuracy_mean)).collect();
    println!(
        "PASS a09: achieved |mean DDP| {achieved:?} for targets {SWEEP_DELTAS:?}, \
         accuracy {accs:?}, {elapsed:?}"
    );
}

#[test]
fn a10_smoothed_disparity_curve_is_monotone_within_two_standard_errors() {
    let started = Instant::now();
    let ds = big_dataset();
    let p = estimate_group_probs(ds.labels(), ds.sensitive()).unwrap();
    let (fit, val) = split(ds, 0.7, 1001).unwrap();
    let fit_x = fit.features_with_sensitive();
    let val_x = val.features_with_sensitive();
    let tc = TrainConfig { l2_strength: 1e-5, ..Default::default() };

    for metric in FairnessMetric::ALL {
        let (lo, hi) = feasible_bracket(metric, &p);
        let mut means = Vec::new();
        let mut ses = Vec::new();
        for k in 0..21 {
            let t = lo + k as f64 * (hi - lo) / 20.0;
            let dm = solve_design_matrix(metric, &p, t).unwrap();
            let mut values = Vec::new();
            for repeat in 0..5u64 {
                // repeat seeds shared across t so the curve uses common draws
                let labels = perturb(fit.labels(), fit.sensitive(), &dm, 2000 + repeat).unwrap();
                let fitted = train(fit_x.view(), &labels, &tc).unwrap();
                let pred = predict(&fitted.model, val_x.view(), 0.5).unwrap();
                values.push(disparity(metric, &pred, val.labels(), val.sensitive()).unwrap());
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
            means.push(mean);
            ses.push((var / values.len() as f64).sqrt());
        }
        for i in 0..means.len() - 1 {
            let rise = means[i + 1] - means[i];
            let slack = 2.0 * (ses[i].powi(2) + ses[i + 1].powi(2)).sqrt();
            assert!(
                rise <= slack,
                "{metric}: curve rises by {rise:.5} (allowed {slack:.5}) between grid points {i} and {}",
                i + 1
            );
        }
        println!(
            "PASS a10 {metric}: D spans {:+.4} -> {:+.4} over 21 points, monotone within 2 SEs",
            means[0],
            means[means.len() - 1]
        );
    }
    let elapsed = started.elapsed();
    println!("PASS a10: all metrics monotone, {elapsed:?}");
}
