use nalgebra::DMatrix;

use super::*;
use crate::panel::{ObservationRow, PanelDataset, Provenance};

fn panel_from_cells(cells: [[&[f64]; 2]; 2]) -> PanelDataset {
    // two clusters per group, rows alternating between them
    let mut rows = Vec::new();
    for d in 0..2u8 {
        for t in 0..2u8 {
            for (i, &y) in cells[d as usize][t as usize].iter().enumerate() {
                rows.push(
                    ObservationRow::new(format!("g{d}c{}", i % 2), d, t, y, 1.0).unwrap(),
                );
            }
        }
    }
    PanelDataset::new(rows, Provenance::default()).unwrap()
}

#[test]
fn degenerate_panel_estimates_point_mass() {
    let panel = panel_from_cells([[&[3.0, 3.0], &[3.0, 3.0]], [&[3.0, 3.0], &[3.0, 3.0]]]);
    let measure = estimate_implied_pmf(&panel, None, true).unwrap();
    assert_eq!(measure.support(), &[3.0]);
    assert_eq!(measure.masses(), &[1.0]);
    assert!(measure.is_proper());
}

#[test]
fn implied_pmf_arithmetic_on_cells() {
    // cells realize masses (0.1,0.9), (0.5,0.5), (0.7,0.3) for treated-pre,
    // comparison-post, comparison-pre
    let treated_pre: Vec<f64> = std::iter::repeat(0.0)
        .take(1)
        .chain(std::iter::repeat(1.0).take(9))
        .collect();
    let comparison_post = vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
    let comparison_pre = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    let treated_post = vec![0.0, 1.0];
    let panel = panel_from_cells([
        [&comparison_pre, &comparison_post],
        [&treated_pre, &treated_post],
    ]);
    let measure = estimate_implied_pmf(&panel, None, true).unwrap();
    assert_eq!(measure.support(), &[0.0, 1.0]);
    assert!((measure.masses()[0] + 0.1).abs() < 1e-12);
    assert!((measure.masses()[1] - 1.1).abs() < 1e-12);
    assert!(!measure.is_proper());
}

#[test]
fn bins_only_in_treated_post_are_dropped() {
    let panel = panel_from_cells([
        [&[0.0, 1.0], &[0.0, 1.0]],
        [&[0.0, 1.0], &[7.0, 7.0]],
    ]);
    let pruned = estimate_implied_pmf(&panel, None, true).unwrap();
    assert_eq!(pruned.support(), &[0.0, 1.0]);
    let full = estimate_implied_pmf(&panel, None, false).unwrap();
    assert_eq!(full.support(), &[0.0, 1.0, 7.0]);
    assert_eq!(full.masses()[2], 0.0);
}

#[test]
fn studentized_min_examples() {
    let m = crate::distributions::SignedMeasure::new(vec![0.0, 1.0], vec![1.05, -0.05]).unwrap();
    let r = studentized_min(&m, &[0.02, 0.01]).unwrap();
    assert!((r.statistic + 5.0).abs() < 1e-12);
    assert_eq!(r.argmin, Some(1.0));

    // all estimates and ses positive: statistic positive
    let p = crate::distributions::SignedMeasure::new(vec![0.0, 1.0], vec![0.4, 0.6]).unwrap();
    let r = studentized_min(&p, &[0.1, 0.2]).unwrap();
    assert!(r.statistic > 0.0);

    // zero se with a negative estimate forces deterministic rejection
    let q =
        crate::distributions::SignedMeasure::new(vec![0.0, 1.0], vec![-0.1, 1.1]).unwrap();
    let r = studentized_min(&q, &[0.0, 0.1]).unwrap();
    assert_eq!(r.statistic, f64::NEG_INFINITY);
    assert_eq!(r.argmin, Some(0.0));
    assert_eq!(r.studentized[0], None);

    // zero se with a non-negative estimate is merely excluded
    let ok = crate::distributions::SignedMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let r = studentized_min(&ok, &[0.0, 0.25]).unwrap();
    assert_eq!(r.studentized[0], None);
    assert!((r.statistic - 2.0).abs() < 1e-12);

    // everything excluded: numerical error
    let all = crate::distributions::SignedMeasure::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    assert!(matches!(
        studentized_min(&all, &[0.0, 0.0]),
        Err(Error::Numerical(_))
    ));

    // negative standard errors are invalid input
    assert!(studentized_min(&all, &[-0.1, 0.1]).is_err());
}

#[test]
fn critical_value_validates_input() {
    let asymmetric = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
    assert!(least_favorable_cv(&asymmetric, 0.05, 2000, 1).is_err());

    let ok = DMatrix::identity(2, 2);
    assert!(least_favorable_cv(&ok, 1.5, 2000, 1).is_err());
    assert!(least_favorable_cv(&ok, 0.05, 0, 1).is_err());
    assert!(least_favorable_cv(&ok, 0.05, 2000, 1).is_ok());
}

#[test]
fn zero_variance_panel_gives_zero_matrix() {
    let panel = panel_from_cells([[&[2.0, 2.0], &[2.0, 2.0]], [&[2.0, 2.0], &[2.0, 2.0]]]);
    let boot = cluster_bootstrap_cov(&panel, None, true, 200, 3).unwrap();
    assert_eq!(boot.matrix.nrows(), 1);
    assert_eq!(boot.matrix[(0, 0)], 0.0);
}

#[test]
fn falsification_test_runs_end_to_end() {
    let panel = crate::simulate::simulate(crate::simulate::Dgp::Example3, 300, 5, 10).unwrap();
    let config = TestConfig {
        bootstrap_reps: 150,
        cv_sims: 1500,
        seed: 42,
        binning: Some(crate::distributions::Binning::new(5.0, 0.0).unwrap()),
        ..TestConfig::default()
    };
    let result = falsification_test(&panel, &config).unwrap();
    assert_eq!(result.support.len(), result.implied_pmf.len());
    assert_eq!(result.support.len(), result.studentized.len());
    assert!(result.p_value >= 0.0 && result.p_value <= 1.0);
    assert_eq!(
        result.decision == Decision::Reject,
        result.statistic < result.critical_value
    );
    // decision consistent with the p-value (continuous minima, no ties)
    assert_eq!(
        result.decision == Decision::Reject,
        result.p_value < config.alpha
    );
}

#[test]
fn config_validation_catches_bad_parameters() {
    let bad_alpha = TestConfig {
        alpha: 1.0,
        ..TestConfig::default()
    };
    assert!(bad_alpha.validate().is_err());
    let bad_reps = TestConfig {
        bootstrap_reps: 50,
        ..TestConfig::default()
    };
    assert!(bad_reps.validate().is_err());
    let bad_sims = TestConfig {
        cv_sims: 10,
        ..TestConfig::default()
    };
    assert!(bad_sims.validate().is_err());
}
