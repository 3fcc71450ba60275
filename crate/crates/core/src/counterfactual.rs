//! Counterfactual distribution construction and parallel-trends diagnostics.
//!
//! Two routes to the treated group's untreated post-period distribution:
//!
//! * the additive route `F10 + F01 - F00`, which is a genuine CDF exactly
//!   when trends are parallel at the distribution level, and otherwise
//!   dips or exceeds somewhere — giving a falsifiable implication; and
//! * the changes-in-changes route of Athey & Imbens (2006), which maps
//!   quantiles through the comparison group and always yields a proper
//!   distribution.
//!
//! The gap between the two routes is itself informative: they coincide when
//! the population is (as-if) randomized or stationary, and generally differ
//! otherwise.

use crate::distributions::{
    CumulativeCurve, DiscreteDistribution, MonotoneTransform, SignedMeasure, PROPERNESS_TOLERANCE,
};
use crate::error::Result;
use crate::panel::FourCells;

/// The three cell distributions counterfactual construction may read, on a
/// common support. Obtained from [`FourCells::counterfactual_inputs`]; the
/// treated-post cell is structurally absent.
#[derive(Debug, Clone, Copy)]
pub struct CounterfactualInputs<'a> {
    pub treated_pre: &'a DiscreteDistribution,
    pub comparison_pre: &'a DiscreteDistribution,
    pub comparison_post: &'a DiscreteDistribution,
}

/// The additive-route counterfactual: a signed measure with unit total mass
/// whose negative dips falsify distribution-level parallel trends.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpliedCounterfactual {
    pub pmf: SignedMeasure,
    pub cdf: CumulativeCurve,
    pub min_mass: f64,
    /// Support point where the minimum mass is attained.
    pub argmin: f64,
    /// All masses >= -1e-12 (float dust only; sampling noise is the
    /// inference module's concern).
    pub is_proper: bool,
}

/// Mass-level additive counterfactual: `f(y) = f10(y) + f01(y) - f00(y)`.
/// The coefficients sum to one, so the result always has unit total mass
/// whatever the inputs.
pub fn implied_counterfactual(inputs: CounterfactualInputs<'_>) -> Result<ImpliedCounterfactual> {
    let support = inputs.treated_pre.support();
    debug_assert_eq!(support, inputs.comparison_pre.support());
    debug_assert_eq!(support, inputs.comparison_post.support());
    let masses: Vec<f64> = (0..support.len())
        .map(|i| {
            inputs.treated_pre.masses()[i] + inputs.comparison_post.masses()[i]
                - inputs.comparison_pre.masses()[i]
        })
        .collect();
    let pmf = SignedMeasure::new(support.to_vec(), masses)?;
    let (min_mass, argmin) = pmf.min_mass();
    let cdf = pmf.cdf();
    Ok(ImpliedCounterfactual {
        is_proper: min_mass >= -PROPERNESS_TOLERANCE,
        pmf,
        cdf,
        min_mass,
        argmin,
    })
}

/// Result of the distribution-level parallel trends check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfParallelCheck {
    pub holds: bool,
    pub max_abs_deviation: f64,
    /// Support point attaining the largest deviation.
    pub argmax: f64,
}

/// Checks whether CDF trends are parallel across groups:
/// `max_y |(F11(y) - F10(y)) - (F01(y) - F00(y))| <= tolerance`.
///
/// Meant for population or simulated quadruples where all four cells are
/// untreated-outcome laws; on observed data the treated-post cell contains
/// treated outcomes and the deviation also absorbs the treatment effect.
pub fn check_cdf_parallel(cells: &FourCells, tolerance: f64) -> CdfParallelCheck {
    let curves: Vec<CumulativeCurve> = [(0u8, 0u8), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(d, t)| cells.dist(d, t).cdf())
        .collect();
    let (f00, f01, f10, f11) = (&curves[0], &curves[1], &curves[2], &curves[3]);
    let mut max_abs = 0.0;
    let mut argmax = cells.support()[0];
    for (i, &y) in cells.support().iter().enumerate() {
        let dev = (f11.values()[i] - f10.values()[i]) - (f01.values()[i] - f00.values()[i]);
        if dev.abs() > max_abs {
            max_abs = dev.abs();
            argmax = y;
        }
    }
    CdfParallelCheck {
        holds: max_abs <= tolerance,
        max_abs_deviation: max_abs,
        argmax,
    }
}

/// Difference-in-differences of cell means after transforming the outcome:
/// `(E g(Y11) - E g(Y10)) - (E g(Y01) - E g(Y00))`, with means taken on the
/// (possibly binned) cell distributions.
pub fn did_att(cells: &FourCells, g: &MonotoneTransform) -> Result<f64> {
    let m = |d: u8, t: u8| -> Result<f64> { Ok(cells.dist(d, t).apply(g)?.mean()) };
    Ok((m(1, 1)? - m(1, 0)?) - (m(0, 1)? - m(0, 0)?))
}

/// Changes-in-changes counterfactual
/// `F(y) = F10( Q00( F01(y) ) )` with the right-continuous generalized
/// inverse `Q00(q) = inf { y : F00(y) >= q }` (Athey & Imbens 2006, applied
/// as a plug-in on the discrete support).
///
/// The composition of non-decreasing maps is non-decreasing, so the masses
/// obtained by differencing are non-negative; any deficit left at the top of
/// the support (possible when the treated-pre distribution extends past the
/// comparison group's range) is folded into the last support point so the
/// result is always a proper distribution.
pub fn cic_counterfactual(inputs: CounterfactualInputs<'_>) -> Result<DiscreteDistribution> {
    let support = inputs.treated_pre.support();
    let f10 = inputs.treated_pre.cdf();
    let f00 = inputs.comparison_pre.cdf();
    let f01 = inputs.comparison_post.cdf();

    let n = support.len();
    let mut values: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let q = f01.values()[i];
        let x = f00.quantile(q);
        values.push(f10.at(x));
    }
    values[n - 1] = 1.0;

    let mut masses = Vec::with_capacity(n);
    let mut prev = 0.0;
    for &v in &values {
        masses.push((v - prev).max(0.0));
        prev = v;
    }
    DiscreteDistribution::new(support.to_vec(), masses, 1.0)
}

/// How far apart the two counterfactual routes are.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    /// `sup_y |F_cic(y) - F_implied(y)|`.
    pub sup_cdf_distance: f64,
    /// True when the implied measure had negative dips and the comparison
    /// was made against its positive-part normalization instead.
    pub positive_part_normalized: bool,
}

/// Sup-CDF distance between the changes-in-changes counterfactual and the
/// additive implied counterfactual.
pub fn counterfactual_divergence(cells: &FourCells) -> Result<Divergence> {
    let inputs = cells.counterfactual_inputs();
    let implied = implied_counterfactual(inputs)?;
    let cic = cic_counterfactual(inputs)?;
    let (implied_cdf, normalized) = if implied.is_proper {
        (implied.cdf, false)
    } else {
        (implied.pmf.positive_part_normalized()?.cdf(), true)
    };
    Ok(Divergence {
        sup_cdf_distance: cic.cdf().sup_distance(&implied_cdf)?,
        positive_part_normalized: normalized,
    })
}
