//! Monte Carlo and determinism checks for the inference pipeline.

use didform::distributions::Binning;
use didform::inference::{
    cluster_bootstrap_cov, estimate_implied_pmf, falsification_test, least_favorable_cv, Decision,
    TestConfig,
};
use didform::panel::{ObservationRow, PanelDataset, Provenance};
use didform::simulate::{simulate, simulate_example3, Dgp, BINARY_DEFAULT_P};
use nalgebra::DMatrix;

fn row(cluster: &str, d: u8, t: u8, y: f64, w: f64) -> ObservationRow {
    ObservationRow::new(cluster, d, t, y, w).unwrap()
}

/// Independent implied-PMF oracle: per-cell weighted masses on a fixed
/// support, combined bin by bin.
fn implied_on_support(rows: &[ObservationRow], support: &[f64]) -> Vec<f64> {
    let k = support.len();
    let mut mass = vec![[0.0f64; 3]; k];
    let mut totals = [0.0f64; 3];
    for r in rows {
        let cell = match (r.group, r.period) {
            (0, 0) => 0,
            (0, 1) => 1,
            (1, 0) => 2,
            _ => continue,
        };
        let idx = support.iter().position(|&s| s == r.outcome).unwrap();
        mass[idx][cell] += r.weight;
        totals[cell] += r.weight;
    }
    (0..k)
        .map(|j| mass[j][2] / totals[2] + mass[j][1] / totals[1] - mass[j][0] / totals[0])
        .collect()
}

#[test]
fn golden_simulation_values_are_stable() {
    // frozen output of the seeded generator; a change here means the RNG
    // value stream moved and simulation results are no longer reproducible
    let panel = simulate_example3(3, 7, 2, None).unwrap();
    let expected = [
        6.072859008705208,
        59.22537040400396,
        3.6742338463921382,
        41.01887276071282,
        11.393986924099135,
        30.29341925970016,
        98.39338133261266,
        56.993518998495404,
        5.416142758698976,
        94.82846798186591,
        56.39898779596225,
        62.971052792961736,
    ];
    let outcomes: Vec<f64> = panel.rows().iter().map(|r| r.outcome).collect();
    assert_eq!(outcomes, expected);
}

#[test]
fn two_cluster_bootstrap_matches_exact_enumeration() {
    // two clusters covering all four cells: the bootstrap distribution has
    // exactly three distinct resamples, (A,A), (A,B)=(B,A), (B,B), with
    // probabilities 1/4, 1/2, 1/4
    let a_rows = vec![
        row("a", 0, 0, 0.0, 1.0),
        row("a", 0, 0, 0.0, 1.0),
        row("a", 0, 0, 1.0, 1.0),
        row("a", 0, 1, 0.0, 1.0),
        row("a", 0, 1, 1.0, 1.0),
        row("a", 0, 1, 1.0, 1.0),
        row("a", 1, 0, 0.0, 1.0),
        row("a", 1, 0, 1.0, 1.0),
        row("a", 1, 1, 1.0, 1.0),
    ];
    let b_rows = vec![
        row("b", 0, 0, 1.0, 1.0),
        row("b", 0, 0, 1.0, 1.0),
        row("b", 0, 0, 0.0, 1.0),
        row("b", 0, 1, 1.0, 1.0),
        row("b", 0, 1, 0.0, 1.0),
        row("b", 1, 0, 1.0, 1.0),
        row("b", 1, 0, 1.0, 1.0),
        row("b", 1, 0, 0.0, 1.0),
        row("b", 1, 1, 0.0, 1.0),
    ];
    let mut all = a_rows.clone();
    all.extend(b_rows.clone());
    let panel = PanelDataset::new(all.clone(), Provenance::default()).unwrap();

    let support = [0.0, 1.0];
    let v_aa = implied_on_support(&a_rows, &support);
    let v_bb = implied_on_support(&b_rows, &support);
    let v_ab = implied_on_support(&all, &support);

    let k = support.len();
    let mut mean = vec![0.0; k];
    for j in 0..k {
        mean[j] = 0.25 * v_aa[j] + 0.5 * v_ab[j] + 0.25 * v_bb[j];
    }
    let mut exact = DMatrix::<f64>::zeros(k, k);
    for (weight, v) in [(0.25, &v_aa), (0.5, &v_ab), (0.25, &v_bb)] {
        for i in 0..k {
            for j in 0..k {
                exact[(i, j)] += weight * (v[i] - mean[i]) * (v[j] - mean[j]);
            }
        }
    }

    let boot = cluster_bootstrap_cov(&panel, None, true, 100_000, 20260810).unwrap();
    assert_eq!(boot.support, support);
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 1e-4, "degenerate oracle, test is vacuous");
    for i in 0..k {
        for j in 0..k {
            let diff = (boot.matrix[(i, j)] - exact[(i, j)]).abs();
            assert!(
                diff <= 0.05 * scale,
                "cov[{i},{j}] = {} vs exact {} (diff {diff})",
                boot.matrix[(i, j)],
                exact[(i, j)]
            );
        }
    }
}

#[test]
fn bootstrap_covariance_is_identical_across_thread_pools() {
    let panel = simulate(Dgp::Example3, 400, 17, 12).unwrap();
    let binning = Binning::new(5.0, 0.0).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| cluster_bootstrap_cov(&panel, Some(&binning), true, 200, 5).unwrap())
    };
    let reference = run(1);
    for threads in [4, 8] {
        let other = run(threads);
        assert_eq!(reference.support, other.support);
        assert_eq!(reference.matrix, other.matrix);
    }
}

#[test]
fn full_test_is_deterministic() {
    let panel = simulate(Dgp::Example3, 300, 23, 10).unwrap();
    let config = TestConfig {
        bootstrap_reps: 150,
        cv_sims: 2000,
        seed: 11,
        binning: Some(Binning::new(5.0, 0.0).unwrap()),
        ..TestConfig::default()
    };
    let a = falsification_test(&panel, &config).unwrap();
    let b = falsification_test(&panel, &config).unwrap();
    assert_eq!(a, b);
}

#[test]
fn weights_scale_invariance() {
    let base = simulate(Dgp::Binary { p: BINARY_DEFAULT_P }, 400, 3, 8).unwrap();
    let rescale = |factor: f64| {
        let rows: Vec<ObservationRow> = base
            .rows()
            .iter()
            .map(|r| row(&r.cluster_id, r.group, r.period, r.outcome, r.weight * factor))
            .collect();
        PanelDataset::new(rows, Provenance::default()).unwrap()
    };
    let config = TestConfig {
        bootstrap_reps: 150,
        cv_sims: 2000,
        seed: 4,
        ..TestConfig::default()
    };
    let reference = falsification_test(&base, &config).unwrap();

    // power-of-two factor: floating point arithmetic only shifts exponents
    let pow2 = falsification_test(&rescale(4.0), &config).unwrap();
    assert_eq!(reference.statistic, pow2.statistic);
    assert_eq!(reference.critical_value, pow2.critical_value);
    assert_eq!(reference.implied_pmf, pow2.implied_pmf);
    assert_eq!(reference.decision, pow2.decision);

    // arbitrary positive factor: equal up to rounding dust; near-singular
    // correlations amplify last-bit wobble through sqrt(eigenvalue), so the
    // critical value gets sqrt(eps) slack
    let odd = falsification_test(&rescale(3.7), &config).unwrap();
    assert!((reference.statistic - odd.statistic).abs() < 1e-9);
    assert!((reference.critical_value - odd.critical_value).abs() < 1e-6);
    assert_eq!(reference.decision, odd.decision);
}

#[test]
fn support_labels_do_not_affect_the_statistic() {
    let base = simulate(Dgp::Binary { p: BINARY_DEFAULT_P }, 400, 6, 8).unwrap();
    let relabeled = PanelDataset::new(
        base.rows()
            .iter()
            .map(|r| row(&r.cluster_id, r.group, r.period, 2.0 * r.outcome + 1.0, r.weight))
            .collect(),
        Provenance::default(),
    )
    .unwrap();
    let config = TestConfig {
        bootstrap_reps: 150,
        cv_sims: 2000,
        seed: 8,
        ..TestConfig::default()
    };
    let a = falsification_test(&base, &config).unwrap();
    let b = falsification_test(&relabeled, &config).unwrap();
    assert_eq!(a.statistic, b.statistic);
    assert_eq!(a.critical_value, b.critical_value);
    assert_eq!(a.p_value, b.p_value);
    assert_eq!(a.decision, b.decision);
}

#[test]
fn loosening_alpha_never_unrejects() {
    let panel = simulate(Dgp::NormalViolation, 600, 31, 10).unwrap();
    let binning = Binning::new(0.25, 0.0).unwrap();
    let mut last_cv = f64::NEG_INFINITY;
    let mut rejected_before = false;
    for alpha in [0.01, 0.05, 0.10, 0.20, 0.50] {
        let config = TestConfig {
            alpha,
            bootstrap_reps: 150,
            cv_sims: 2000,
            seed: 12,
            binning: Some(binning),
            ..TestConfig::default()
        };
        let result = falsification_test(&panel, &config).unwrap();
        assert!(
            result.critical_value >= last_cv,
            "critical value decreased when alpha grew"
        );
        last_cv = result.critical_value;
        if rejected_before {
            assert_eq!(result.decision, Decision::Reject);
        }
        rejected_before = result.decision == Decision::Reject;
    }
}

#[test]
fn binary_null_design_rejects_rarely() {
    // mean trends are parallel, and for binary outcomes that pins the whole
    // distribution: rejections should stay near the nominal level, and the
    // least-favorable cutoff is conservative on top
    let replications = 300;
    let rejections: usize = (0..replications)
        .map(|rep| {
            let panel = simulate(
                Dgp::Binary { p: BINARY_DEFAULT_P },
                2000,
                1000 + rep as u64,
                50,
            )
            .unwrap();
            let config = TestConfig {
                bootstrap_reps: 200,
                cv_sims: 1500,
                seed: 7000 + rep as u64,
                ..TestConfig::default()
            };
            match falsification_test(&panel, &config).unwrap().decision {
                Decision::Reject => 1,
                Decision::FailToReject => 0,
            }
        })
        .sum();
    let rate = rejections as f64 / replications as f64;
    assert!(rate <= 0.07, "binary null rejection rate {rate}");
}

#[test]
fn example3_large_sample_implied_pmf_is_nearly_proper() {
    let panel = simulate_example3(100_000, 13, 50, None).unwrap();
    let binning = Binning::new(2.0, 0.0).unwrap();
    let measure = estimate_implied_pmf(&panel, Some(&binning), true).unwrap();
    let min_mass = measure
        .masses()
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    assert!(min_mass >= -0.01, "min implied mass {min_mass}");
}

#[test]
fn one_dimensional_critical_value_sanity() {
    let cv = least_favorable_cv(&DMatrix::identity(1, 1), 0.05, 20_000, 99).unwrap();
    assert!((cv + 1.645).abs() < 0.05, "cv {cv}");
}
