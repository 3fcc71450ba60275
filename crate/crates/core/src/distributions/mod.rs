//! Weighted finite discrete distributions, signed measures, support
//! alignment, binning and distances.
//!
//! Everything downstream (counterfactual construction, mixture
//! decomposition, the falsification test) works with probability mass
//! functions on a finite, strictly increasing support. The counting measure
//! on that support is the dominating measure, so density-level statements
//! become statements about mass vectors.

mod transform;

pub use transform::MonotoneTransform;

use crate::error::{Error, Result};
use crate::numeric;

/// Tolerance for "masses sum to one" checks.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Tolerance below which a signed mass is still considered non-negative.
/// Absorbs float error from cancellation; sampling noise is the inference
/// module's business, not this tolerance's.
pub const PROPERNESS_TOLERANCE: f64 = 1e-12;

/// Replaces -0.0 by +0.0 so equal outcomes always carry identical bits.
#[inline]
pub(crate) fn canonical(value: f64) -> f64 {
    if value == 0.0 {
        0.0
    } else {
        value
    }
}

fn check_support(support: &[f64]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::Input("support must be non-empty".into()));
    }
    for w in support.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Input(format!(
                "support must be strictly increasing; saw {} then {}",
                w[0], w[1]
            )));
        }
    }
    if support.iter().any(|y| !y.is_finite()) {
        return Err(Error::Input("support points must be finite".into()));
    }
    Ok(())
}

/// A probability mass function on a finite, strictly increasing support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    masses: Vec<f64>,
    /// Total observation weight behind this distribution (metadata; 1.0 for
    /// analytic constructions).
    total_weight: f64,
}

impl DiscreteDistribution {
    /// Builds a distribution, validating the invariants: strictly increasing
    /// support, non-negative masses, masses summing to one within
    /// [`MASS_TOLERANCE`].
    pub fn new(support: Vec<f64>, masses: Vec<f64>, total_weight: f64) -> Result<Self> {
        check_support(&support)?;
        if masses.len() != support.len() {
            return Err(Error::Input(format!(
                "{} support points but {} masses",
                support.len(),
                masses.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0)) {
            return Err(Error::Input(format!("negative or NaN mass {m}")));
        }
        let total = numeric::sum(&masses);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Input(format!(
                "masses sum to {total}, expected 1 within {MASS_TOLERANCE}"
            )));
        }
        if !(total_weight > 0.0) {
            return Err(Error::Input(format!(
                "total weight must be positive, got {total_weight}"
            )));
        }
        let support = support.into_iter().map(canonical).collect();
        Ok(Self {
            support,
            masses,
            total_weight,
        })
    }

    /// A unit point mass.
    pub fn point_mass(at: f64) -> Result<Self> {
        Self::new(vec![at], vec![1.0], 1.0)
    }

    /// Weighted empirical PMF of raw observations `(outcome, weight)`.
    ///
    /// The mass at `y` is the total weight of observations with outcome
    /// exactly `y`, divided by the total weight. The support is the sorted
    /// set of distinct outcomes.
    pub fn from_observations(observations: &[(f64, f64)]) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Input("no observations".into()));
        }
        for &(y, w) in observations {
            if !y.is_finite() {
                return Err(Error::Input(format!("non-finite outcome {y}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Input(format!("weight must be positive and finite, got {w}")));
            }
        }
        let mut pairs: Vec<(f64, f64)> = observations
            .iter()
            .map(|&(y, w)| (canonical(y), w))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite outcomes"));

        let mut total = numeric::CompensatedSum::new();
        for &(_, w) in &pairs {
            total.add(w);
        }
        let total_weight = total.value();

        let mut support = Vec::new();
        let mut masses = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let y = pairs[i].0;
            let mut group = numeric::CompensatedSum::new();
            while i < pairs.len() && pairs[i].0 == y {
                group.add(pairs[i].1);
                i += 1;
            }
            support.push(y);
            masses.push(group.value() / total_weight);
        }
        Self::new(support, masses, total_weight)
    }

    /// Weighted empirical PMF after mapping each outcome to its bin label.
    pub fn from_binned_observations(observations: &[(f64, f64)], binning: &Binning) -> Result<Self> {
        let binned: Vec<(f64, f64)> = observations
            .iter()
            .map(|&(y, w)| Ok((binning.label(y)?, w)))
            .collect::<Result<_>>()?;
        Self::from_observations(&binned)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Mean `sum_y y f(y)`.
    pub fn mean(&self) -> f64 {
        numeric::dot(&self.support, &self.masses)
    }

    /// Cumulative distribution function as a right-continuous step curve.
    pub fn cdf(&self) -> CumulativeCurve {
        CumulativeCurve::from_masses(self.support.clone(), &self.masses)
    }

    /// Pushes the distribution through a strictly monotone transform: the
    /// support is mapped pointwise, masses are carried unchanged.
    pub fn apply(&self, g: &MonotoneTransform) -> Result<Self> {
        let mapped = g.map_support(&self.support)?;
        Self::new(mapped, self.masses.clone(), self.total_weight)
    }

    /// The same distribution re-expressed on `target`, which must be a
    /// superset of the current support. New points get mass zero.
    pub fn on_support(&self, target: &[f64]) -> Result<Self> {
        let mut masses = vec![0.0; target.len()];
        let mut j = 0;
        for (&y, &m) in self.support.iter().zip(&self.masses) {
            while j < target.len() && target[j] < y {
                j += 1;
            }
            if j >= target.len() || target[j] != y {
                return Err(Error::Input(format!(
                    "target support does not contain point {y}"
                )));
            }
            masses[j] = m;
        }
        Self::new(target.to_vec(), masses, self.total_weight)
    }
}

/// A measure with masses of arbitrary sign that still sum to one. This is
/// the shape of the implied counterfactual PMF: a signed combination of
/// three proper PMFs whose coefficients (+1, +1, -1) sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    support: Vec<f64>,
    masses: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(support: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        check_support(&support)?;
        if masses.len() != support.len() {
            return Err(Error::Input(format!(
                "{} support points but {} masses",
                support.len(),
                masses.len()
            )));
        }
        if masses.iter().any(|m| !m.is_finite()) {
            return Err(Error::Input("masses must be finite".into()));
        }
        let total = numeric::sum(&masses);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Input(format!(
                "signed masses sum to {total}, expected 1 within {MASS_TOLERANCE}"
            )));
        }
        let support = support.into_iter().map(canonical).collect();
        Ok(Self { support, masses })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Smallest mass and the support point where it is attained.
    pub fn min_mass(&self) -> (f64, f64) {
        let mut best = (self.masses[0], self.support[0]);
        for (&m, &y) in self.masses.iter().zip(&self.support) {
            if m < best.0 {
                best = (m, y);
            }
        }
        best
    }

    /// Whether all masses are non-negative within [`PROPERNESS_TOLERANCE`].
    pub fn is_proper(&self) -> bool {
        self.min_mass().0 >= -PROPERNESS_TOLERANCE
    }

    pub fn cdf(&self) -> CumulativeCurve {
        CumulativeCurve::from_masses(self.support.clone(), &self.masses)
    }

    /// Interprets the measure as a proper distribution, clamping masses
    /// below zero and renormalizing the positive part.
    pub fn positive_part_normalized(&self) -> Result<DiscreteDistribution> {
        let clipped: Vec<f64> = self.masses.iter().map(|&m| m.max(0.0)).collect();
        let total = numeric::sum(&clipped);
        if !(total > 0.0) {
            return Err(Error::Numerical("measure has no positive part".into()));
        }
        let masses = clipped.into_iter().map(|m| m / total).collect();
        DiscreteDistribution::new(self.support.clone(), masses, 1.0)
    }

    /// Promotes a proper signed measure (all masses >= -tolerance) to a
    /// distribution, clamping the tolerated negative dust to zero.
    pub fn into_distribution(self) -> Result<DiscreteDistribution> {
        if !self.is_proper() {
            let (m, y) = self.min_mass();
            return Err(Error::Input(format!(
                "measure is not a distribution: mass {m} at {y}"
            )));
        }
        self.positive_part_normalized()
    }
}

/// Prefix sums of a mass vector: a right-continuous step function. For
/// proper distributions the values are non-decreasing in [0, 1]; for signed
/// measures monotonicity may fail, and that failure is exactly what the
/// falsification machinery looks for.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurve {
    support: Vec<f64>,
    values: Vec<f64>,
}

impl CumulativeCurve {
    fn from_masses(support: Vec<f64>, masses: &[f64]) -> Self {
        Self {
            support,
            values: numeric::prefix_sums(masses),
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Curve value at `y` (0 below the support, last value above it).
    pub fn at(&self, y: f64) -> f64 {
        match self.support.partition_point(|&s| s <= y) {
            0 => 0.0,
            i => self.values[i - 1],
        }
    }

    pub fn is_nondecreasing(&self, tolerance: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tolerance) && self.values[0] >= -tolerance
    }

    /// Generalized inverse `inf { y : F(y) >= q }`. Returns the last support
    /// point when the curve never reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let i = self.values.partition_point(|&v| v < q);
        if i >= self.support.len() {
            *self.support.last().expect("non-empty support")
        } else {
            self.support[i]
        }
    }

    /// Largest absolute pointwise gap against another curve on the same
    /// support.
    pub fn sup_distance(&self, other: &CumulativeCurve) -> Result<f64> {
        if self.support != other.support {
            return Err(Error::Input(
                "sup_distance requires curves on a common support".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Half-open binning grid `[origin + k w, origin + (k+1) w)` with the label
/// at the left edge. Labels are computed as `origin + k * width` with
/// integer `k`, so equal outcomes always produce bitwise-equal labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    width: f64,
    origin: f64,
    zero_bin: bool,
}

impl Binning {
    pub fn new(width: f64, origin: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::Input(format!("bin width must be positive, got {width}")));
        }
        if !origin.is_finite() {
            return Err(Error::Input("bin origin must be finite".into()));
        }
        Ok(Self {
            width,
            origin,
            zero_bin: false,
        })
    }

    /// Gives outcome `0` its own dedicated bin, labelled `origin - width`
    /// (one slot below the first regular bin). Intended for non-negative
    /// outcomes where zero means "not observed working" rather than a value
    /// on the wage scale.
    pub fn with_zero_bin(mut self) -> Self {
        self.zero_bin = true;
        self
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn zero_bin(&self) -> bool {
        self.zero_bin
    }

    /// Label of the bin containing `outcome`.
    pub fn label(&self, outcome: f64) -> Result<f64> {
        if !outcome.is_finite() {
            return Err(Error::Input(format!("non-finite outcome {outcome}")));
        }
        if self.zero_bin {
            if outcome < 0.0 {
                return Err(Error::Input(format!(
                    "zero-bin mode requires non-negative outcomes, got {outcome}"
                )));
            }
            if outcome == 0.0 {
                return Ok(self.origin - self.width);
            }
        }
        let mut k = ((outcome - self.origin) / self.width).floor() as i64;
        // the division can land one bin off around exact boundaries; snap k
        // so that label <= outcome < next label holds in the rounded label
        // arithmetic, which also makes binning bin labels a no-op
        while self.origin + (k + 1) as f64 * self.width <= outcome {
            k += 1;
        }
        while self.origin + k as f64 * self.width > outcome {
            k -= 1;
        }
        Ok(canonical(self.origin + k as f64 * self.width))
    }
}

/// Re-expresses every distribution on the union support, inserting zero
/// masses at points a distribution does not carry.
pub fn align_supports(distributions: &[DiscreteDistribution]) -> Result<Vec<DiscreteDistribution>> {
    if distributions.is_empty() {
        return Err(Error::Input("nothing to align".into()));
    }
    let union = union_support(distributions);
    distributions.iter().map(|d| d.on_support(&union)).collect()
}

/// Sorted union of the supports.
pub fn union_support(distributions: &[DiscreteDistribution]) -> Vec<f64> {
    let mut union: Vec<f64> = Vec::new();
    for d in distributions {
        union = merge_sorted(&union, d.support());
    }
    union
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else if b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Total variation distance: half the L1 distance between the mass
/// functions, equivalently `sum_y max(f1(y) - f2(y), 0)`. Aligns the inputs
/// internally. Computed from `|f1 - f2|`, whose float value is exactly
/// symmetric in the arguments.
pub fn total_variation(f1: &DiscreteDistribution, f2: &DiscreteDistribution) -> f64 {
    if f1.support() == f2.support() {
        return half_abs_sum(f1.masses(), f2.masses());
    }
    let aligned = align_supports(&[f1.clone(), f2.clone()]).expect("two valid distributions");
    half_abs_sum(aligned[0].masses(), aligned[1].masses())
}

/// `0.5 * sum_y |a[y] - b[y]|` with compensated accumulation. This is the
/// one formula both `total_variation` and the mixture weight use, so the
/// two agree bitwise.
pub(crate) fn half_abs_sum(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = numeric::CompensatedSum::new();
    for (&x, &y) in a.iter().zip(b) {
        acc.add((x - y).abs());
    }
    0.5 * acc.value()
}

/// `sum_y max(a[y] - b[y], 0)` with compensated accumulation.
pub(crate) fn positive_part_sum(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = numeric::CompensatedSum::new();
    for (&x, &y) in a.iter().zip(b) {
        if x > y {
            acc.add(x - y);
        }
    }
    acc.value()
}
