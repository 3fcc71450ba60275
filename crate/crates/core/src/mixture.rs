//! Mixture structure behind distribution-level parallel trends.
//!
//! A quadruple of cell distributions has parallel CDF trends exactly when
//! each cell can be written as `theta * G_t + (1 - theta) * H_d` — a common
//! time-varying component shared by both groups plus a group-specific
//! stationary component. `decompose` extracts that structure from a pair of
//! distributions sharing a difference; `build_case3_quadruple` generates
//! quadruples with the structure imposed.

use crate::distributions::{align_supports, half_abs_sum, positive_part_sum, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::panel::FourCells;

/// Degenerate corners of the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// `f1 == f2`: the mixing weight is zero and the residual components are
    /// fixed to `f_min` by convention.
    ThetaZero,
    /// Disjoint supports: the common component carries no weight and
    /// `f_min` is fixed to `f1` by convention.
    ThetaOne,
}

/// Decomposition of a pair `(f1, f2)` into
/// `f_j = (1 - theta) * f_min + theta * f_tilde_j`.
///
/// `theta` equals the total variation distance between the inputs, and
/// `theta`, `f_tilde_1`, `f_tilde_2` depend on the pair only through the
/// pointwise difference `f1 - f2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDecomposition {
    pub theta: f64,
    pub f_min: DiscreteDistribution,
    pub f_tilde_1: DiscreteDistribution,
    pub f_tilde_2: DiscreteDistribution,
    pub degeneracy: Option<Degeneracy>,
}

impl MixtureDecomposition {
    /// Rebuilds the original pair from the components.
    pub fn reconstruct(&self) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
        let mix = |tilde: &DiscreteDistribution| -> Result<DiscreteDistribution> {
            let masses: Vec<f64> = self
                .f_min
                .masses()
                .iter()
                .zip(tilde.masses())
                .map(|(&m, &t)| (1.0 - self.theta) * m + self.theta * t)
                .collect();
            DiscreteDistribution::new(self.f_min.support().to_vec(), masses, 1.0)
        };
        Ok((mix(&self.f_tilde_1)?, mix(&self.f_tilde_2)?))
    }
}

/// Splits `(f1, f2)` into a shared component (where the mass functions
/// overlap) and normalized residuals (where they differ). Aligns the inputs
/// internally.
pub fn decompose(f1: &DiscreteDistribution, f2: &DiscreteDistribution) -> MixtureDecomposition {
    let (a, b) = if f1.support() == f2.support() {
        (f1.clone(), f2.clone())
    } else {
        let aligned = align_supports(&[f1.clone(), f2.clone()]).expect("two valid distributions");
        let [a, b]: [DiscreteDistribution; 2] = aligned.try_into().expect("two aligned");
        (a, b)
    };
    let support = a.support().to_vec();
    let n = support.len();

    // theta computed exactly as total_variation computes it; the residual
    // components are normalized by their own sums so they stay unit mass
    // even when the two positive-part sums differ in the last bit
    let theta = half_abs_sum(a.masses(), b.masses());
    let sum_above = positive_part_sum(a.masses(), b.masses());
    let sum_below = positive_part_sum(b.masses(), a.masses());

    let mut min_masses = Vec::with_capacity(n);
    let mut min_total = CompensatedSum::new();
    for (&x, &y) in a.masses().iter().zip(b.masses()) {
        let m = x.min(y);
        min_masses.push(m);
        min_total.add(m);
    }
    let min_total = min_total.value();

    let normalized = |raw: Vec<f64>, total: f64| -> DiscreteDistribution {
        let masses = raw.into_iter().map(|m| m / total).collect();
        DiscreteDistribution::new(support.clone(), masses, 1.0)
            .expect("normalized non-negative masses")
    };

    if theta == 0.0 {
        // identical mass functions
        let f_min = a.clone();
        return MixtureDecomposition {
            theta,
            f_tilde_1: f_min.clone(),
            f_tilde_2: f_min.clone(),
            f_min,
            degeneracy: Some(Degeneracy::ThetaZero),
        };
    }

    let positive_part = |x: &[f64], y: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(y)
            .map(|(&p, &q)| if p > q { p - q } else { 0.0 })
            .collect()
    };
    let f_tilde_1 = normalized(positive_part(a.masses(), b.masses()), sum_above);
    let f_tilde_2 = normalized(positive_part(b.masses(), a.masses()), sum_below);

    if min_total == 0.0 {
        // disjoint supports; f_min is arbitrary, fixed to f1 for determinism
        return MixtureDecomposition {
            theta,
            f_min: a,
            f_tilde_1,
            f_tilde_2,
            degeneracy: Some(Degeneracy::ThetaOne),
        };
    }

    MixtureDecomposition {
        theta,
        f_min: normalized(min_masses, min_total),
        f_tilde_1,
        f_tilde_2,
        degeneracy: None,
    }
}

/// Generator recipe for a quadruple with parallel CDF trends:
/// a weight plus time components `G_t` and group components `H_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Case3Spec {
    theta: f64,
    g: [DiscreteDistribution; 2],
    h: [DiscreteDistribution; 2],
}

impl Case3Spec {
    pub fn new(
        theta: f64,
        g0: DiscreteDistribution,
        g1: DiscreteDistribution,
        h0: DiscreteDistribution,
        h1: DiscreteDistribution,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Input(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(Self {
            theta,
            g: [g0, g1],
            h: [h0, h1],
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Time component for period `t`.
    pub fn g(&self, t: u8) -> &DiscreteDistribution {
        &self.g[t as usize]
    }

    /// Group component for group `d`.
    pub fn h(&self, d: u8) -> &DiscreteDistribution {
        &self.h[d as usize]
    }
}

/// Builds the four cell distributions
/// `F_dt = theta * G_t + (1 - theta) * H_d` on a common support. The result
/// passes the distribution-level parallel trends check by construction: both
/// group differences reduce to `theta * (G_1 - G_0)`.
pub fn build_case3_quadruple(spec: &Case3Spec) -> Result<FourCells> {
    let aligned = align_supports(&[
        spec.g[0].clone(),
        spec.g[1].clone(),
        spec.h[0].clone(),
        spec.h[1].clone(),
    ])?;
    let [g0, g1, h0, h1]: [DiscreteDistribution; 4] = aligned.try_into().expect("four aligned");
    let support = g0.support().to_vec();
    let theta = spec.theta;

    let mix = |g: &DiscreteDistribution, h: &DiscreteDistribution| -> Result<DiscreteDistribution> {
        let masses: Vec<f64> = g
            .masses()
            .iter()
            .zip(h.masses())
            .map(|(&gm, &hm)| theta * gm + (1.0 - theta) * hm)
            .collect();
        DiscreteDistribution::new(support.clone(), masses, 1.0)
    };

    FourCells::from_distributions([
        [mix(&g0, &h0)?, mix(&g1, &h0)?],
        [mix(&g0, &h1)?, mix(&g1, &h1)?],
    ])
}

/// Tries to recover a mixture representation of a quadruple of
/// untreated-outcome laws by decomposing each group's time difference. The
/// candidate is accepted only if rebuilding it reproduces every cell mass
/// within `tolerance`; parallel CDF trends hold if and only if such a
/// representation exists.
pub fn case3_representation(cells: &FourCells, tolerance: f64) -> Option<Case3Spec> {
    let treated = decompose(cells.dist(1, 1), cells.dist(1, 0));
    let comparison = decompose(cells.dist(0, 1), cells.dist(0, 0));

    // the time components come from the treated pair's residuals, the group
    // components from each pair's shared part
    let theta = treated.theta.clamp(0.0, 1.0);
    let spec = Case3Spec::new(
        theta,
        treated.f_tilde_2.clone(),
        treated.f_tilde_1.clone(),
        comparison.f_min.clone(),
        treated.f_min.clone(),
    )
    .ok()?;
    let rebuilt = build_case3_quadruple(&spec).ok()?;

    let matches = (0..2u8).all(|d| {
        (0..2u8).all(|t| {
            let rebuilt_dist = rebuilt.dist(d, t);
            let original = cells.dist(d, t);
            original.support() == rebuilt_dist.support()
                && original
                    .masses()
                    .iter()
                    .zip(rebuilt_dist.masses())
                    .all(|(a, b)| (a - b).abs() <= tolerance)
        })
    });
    matches.then_some(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterfactual::check_cdf_parallel;
    use crate::distributions::total_variation;

    fn dist(support: &[f64], masses: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(support.to_vec(), masses.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn hand_computed_decomposition() {
        let s = [0.0, 1.0, 2.0];
        let f1 = dist(&s, &[0.5, 0.5, 0.0]);
        let f2 = dist(&s, &[0.0, 0.5, 0.5]);
        let d = decompose(&f1, &f2);
        assert!((d.theta - 0.5).abs() < 1e-15);
        assert_eq!(d.f_min.masses(), &[0.0, 1.0, 0.0]);
        assert_eq!(d.f_tilde_1.masses(), &[1.0, 0.0, 0.0]);
        assert_eq!(d.f_tilde_2.masses(), &[0.0, 0.0, 1.0]);
        assert_eq!(d.degeneracy, None);
    }

    #[test]
    fn identical_inputs_are_theta_zero() {
        let f = dist(&[0.0, 1.0], &[0.25, 0.75]);
        let d = decompose(&f, &f);
        assert_eq!(d.theta, 0.0);
        assert_eq!(d.degeneracy, Some(Degeneracy::ThetaZero));
        let (r1, r2) = d.reconstruct().unwrap();
        assert_eq!(r1.masses(), f.masses());
        assert_eq!(r2.masses(), f.masses());
    }

    #[test]
    fn disjoint_supports_are_theta_one() {
        let f1 = dist(&[0.0, 1.0], &[0.5, 0.5]);
        let f2 = dist(&[2.0, 3.0], &[0.25, 0.75]);
        let d = decompose(&f1, &f2);
        assert!((d.theta - 1.0).abs() <= 1e-12);
        assert_eq!(d.degeneracy, Some(Degeneracy::ThetaOne));
        // residuals are the originals on the union support
        let aligned = align_supports(&[f1, f2]).unwrap();
        assert_eq!(d.f_tilde_1.masses(), aligned[0].masses());
        assert_eq!(d.f_tilde_2.masses(), aligned[1].masses());
    }

    #[test]
    fn theta_equals_total_variation_bitwise() {
        let f1 = dist(&[0.0, 1.0, 2.0], &[0.2, 0.5, 0.3]);
        let f2 = dist(&[0.0, 1.0, 2.0], &[0.4, 0.1, 0.5]);
        let d = decompose(&f1, &f2);
        assert_eq!(d.theta, total_variation(&f1, &f2));
    }

    #[test]
    fn reconstruction_round_trips() {
        let f1 = dist(&[0.0, 1.0, 2.0, 5.0], &[0.1, 0.3, 0.2, 0.4]);
        let f2 = dist(&[0.0, 1.0, 2.0, 5.0], &[0.25, 0.25, 0.25, 0.25]);
        let d = decompose(&f1, &f2);
        let (r1, r2) = d.reconstruct().unwrap();
        for (a, b) in r1.masses().iter().zip(f1.masses()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in r2.masses().iter().zip(f2.masses()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_arithmetic_example() {
        let s = [0.0, 1.0, 2.0];
        let d = MixtureDecomposition {
            theta: 0.5,
            f_min: dist(&s, &[0.0, 1.0, 0.0]),
            f_tilde_1: dist(&s, &[1.0, 0.0, 0.0]),
            f_tilde_2: dist(&s, &[0.0, 0.0, 1.0]),
            degeneracy: None,
        };
        let (r1, _) = d.reconstruct().unwrap();
        assert_eq!(r1.masses(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn case1_and_case2_degenerate_quadruples() {
        let g0 = dist(&[0.0, 1.0], &[0.7, 0.3]);
        let g1 = dist(&[0.0, 1.0], &[0.4, 0.6]);
        let h0 = dist(&[0.0, 1.0], &[0.9, 0.1]);
        let h1 = dist(&[0.0, 1.0], &[0.2, 0.8]);

        // theta = 1: both groups share G_t
        let case1 =
            build_case3_quadruple(&Case3Spec::new(1.0, g0.clone(), g1.clone(), h0.clone(), h1.clone()).unwrap())
                .unwrap();
        assert_eq!(case1.dist(0, 0).masses(), case1.dist(1, 0).masses());
        assert_eq!(case1.dist(0, 1).masses(), case1.dist(1, 1).masses());
        assert_eq!(case1.dist(0, 0).masses(), g0.masses());

        // theta = 0: each group is stationary at H_d
        let case2 =
            build_case3_quadruple(&Case3Spec::new(0.0, g0, g1, h0.clone(), h1.clone()).unwrap()).unwrap();
        assert_eq!(case2.dist(0, 0).masses(), case2.dist(0, 1).masses());
        assert_eq!(case2.dist(1, 0).masses(), case2.dist(1, 1).masses());
        assert_eq!(case2.dist(0, 0).masses(), h0.masses());
        assert_eq!(case2.dist(1, 1).masses(), h1.masses());
    }

    #[test]
    fn built_quadruples_pass_the_parallel_check() {
        let g0 = dist(&[0.0, 1.0, 2.0], &[0.5, 0.25, 0.25]);
        let g1 = dist(&[0.0, 1.0, 2.0], &[0.1, 0.6, 0.3]);
        let h0 = dist(&[1.0, 2.0, 4.0], &[0.3, 0.3, 0.4]);
        let h1 = dist(&[0.0, 4.0], &[0.5, 0.5]);
        let cells =
            build_case3_quadruple(&Case3Spec::new(0.37, g0, g1, h0, h1).unwrap()).unwrap();
        let check = check_cdf_parallel(&cells, 1e-12);
        assert!(check.holds, "deviation {}", check.max_abs_deviation);
    }

    #[test]
    fn representation_recovered_for_structured_quadruples() {
        let g0 = dist(&[0.0, 1.0, 2.0], &[0.5, 0.25, 0.25]);
        let g1 = dist(&[0.0, 1.0, 2.0], &[0.1, 0.6, 0.3]);
        let h0 = dist(&[0.0, 1.0, 2.0], &[0.3, 0.3, 0.4]);
        let h1 = dist(&[0.0, 1.0, 2.0], &[0.5, 0.0, 0.5]);
        let cells =
            build_case3_quadruple(&Case3Spec::new(0.6, g0, g1, h0, h1).unwrap()).unwrap();
        let spec = case3_representation(&cells, 1e-12);
        assert!(spec.is_some());
    }

    #[test]
    fn representation_rejected_for_non_parallel_quadruples() {
        let s = [0.0, 1.0];
        let cells = FourCells::from_distributions([
            [dist(&s, &[0.5, 0.5]), dist(&s, &[0.5, 0.5])],
            [dist(&s, &[0.5, 0.5]), dist(&s, &[0.2, 0.8])],
        ])
        .unwrap();
        assert!(case3_representation(&cells, 1e-12).is_none());
    }
}
