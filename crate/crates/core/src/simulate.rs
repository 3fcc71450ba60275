//! Synthetic panel generators with analytic mean oracles.
//!
//! All randomness is ChaCha8 keyed by `(seed, phase)` with one dedicated
//! stream per simulated unit, so output is identical regardless of how the
//! work is scheduled, and adding units never perturbs existing ones. Normal
//! draws come from `rand_distr::StandardNormal` (ziggurat); lognormal
//! outcomes exponentiate a single standard normal draw.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analytic::AnalyticDistribution;
use crate::distributions::Binning;
use crate::error::{Error, Result};
use crate::mixture::Case3Spec;
use crate::panel::{FourCells, ObservationRow, PanelDataset, Provenance};

pub(crate) const PHASE_SIMULATE: u64 = 1;
pub(crate) const PHASE_BOOTSTRAP: u64 = 2;
pub(crate) const PHASE_CRITICAL_VALUE: u64 = 3;

/// ChaCha8 generator keyed by `(seed, phase)` positioned on `stream`.
/// Distinct phases never share draws even under the same seed.
pub(crate) fn stream_rng(seed: u64, phase: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&phase.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Lognormal location of the shared time component `G_t`.
fn mixture_g_location(t: u8) -> f64 {
    2.0 + t as f64
}

/// Lognormal location of the group component `H_d`.
fn mixture_h_location(d: u8) -> f64 {
    3.0 + d as f64
}

const MIXTURE_SCALE: f64 = 1.0;

/// Default success probabilities for the binary design. The
/// mean difference-in-differences is zero, and for binary outcomes that
/// already pins the whole distribution.
pub const BINARY_DEFAULT_P: [[f64; 2]; 2] = [[0.3, 0.5], [0.4, 0.6]];

/// Data-generating processes for two-group, two-period panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dgp {
    /// Both groups share the time components (`theta = 1`): treatment is
    /// as-if randomly assigned.
    Case1,
    /// Each group keeps its own stationary distribution (`theta = 0`).
    Case2,
    /// Mixture of the two: `theta` of each group follows the shared time
    /// path, the rest follows the group-specific stationary component.
    Case3 { theta: f64 },
    /// `Case3` with `theta = 1/2`; the canonical lognormal illustration.
    Example3,
    /// Bernoulli outcomes with cell probabilities `p[group][period]`.
    Binary { p: [[f64; 2]; 2] },
    /// A design that violates distribution-level parallel trends while
    /// leaving both group mean trends flat: the comparison group's variance
    /// shrinks over time and the treated group is static.
    NormalViolation,
}

impl Dgp {
    fn mixture_theta(&self) -> Option<f64> {
        match *self {
            Dgp::Case1 => Some(1.0),
            Dgp::Case2 => Some(0.0),
            Dgp::Case3 { theta } => Some(theta),
            Dgp::Example3 => Some(0.5),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Dgp::Case3 { theta } if !(0.0..=1.0).contains(&theta) => Err(Error::Input(format!(
                "theta must lie in [0, 1], got {theta}"
            ))),
            Dgp::Binary { p } => {
                for row in &p {
                    for &q in row {
                        if !(0.0..=1.0).contains(&q) {
                            return Err(Error::Input(format!(
                                "binary probability must lie in [0, 1], got {q}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Parameters of the variance-shrink violation design.
pub mod violation {
    /// Comparison group, pre period.
    pub const COMPARISON_PRE: (f64, f64) = (0.0, 1.0);
    /// Comparison group, post period (variance shrinks).
    pub const COMPARISON_POST: (f64, f64) = (0.0, 0.65);
    /// Treated group, both periods.
    pub const TREATED: (f64, f64) = (2.0, 0.5);
}

fn violation_params(d: u8, t: u8) -> (f64, f64) {
    match (d, t) {
        (0, 0) => violation::COMPARISON_PRE,
        (0, 1) => violation::COMPARISON_POST,
        _ => violation::TREATED,
    }
}

/// Draws `n` observations per (group, period) cell. `clusters` ids are split
/// between the groups (treatment varies at the cluster level) and units are
/// assigned round-robin within their group's clusters; cluster layout does
/// not influence the outcome draws.
pub fn simulate(dgp: Dgp, n_per_cell: usize, seed: u64, clusters: usize) -> Result<PanelDataset> {
    dgp.validate()?;
    if n_per_cell < 1 {
        return Err(Error::Input("need at least one observation per cell".into()));
    }
    if clusters < 2 {
        return Err(Error::Input(format!(
            "need at least 2 clusters, got {clusters}"
        )));
    }
    let treated_clusters = clusters / 2;
    let comparison_clusters = clusters - treated_clusters;

    let mut rows = Vec::with_capacity(4 * n_per_cell);
    for d in 0..2u8 {
        for t in 0..2u8 {
            let cell_offset = ((d * 2 + t) as u64) * n_per_cell as u64;
            let group_clusters = if d == 1 {
                treated_clusters
            } else {
                comparison_clusters
            };
            for unit in 0..n_per_cell {
                let mut rng = stream_rng(seed, PHASE_SIMULATE, cell_offset + unit as u64);
                let outcome = draw_outcome(&dgp, d, t, &mut rng);
                let cluster = unit % group_clusters;
                rows.push(ObservationRow::new(
                    format!("g{d}c{cluster:04}"),
                    d,
                    t,
                    outcome,
                    1.0,
                )?);
            }
        }
    }
    PanelDataset::new(
        rows,
        Provenance {
            source: format!("simulated:{dgp:?}"),
            binning: None,
        },
    )
}

fn draw_outcome(dgp: &Dgp, d: u8, t: u8, rng: &mut ChaCha8Rng) -> f64 {
    match dgp {
        Dgp::Binary { p } => {
            let u: f64 = rng.gen();
            if u < p[d as usize][t as usize] {
                1.0
            } else {
                0.0
            }
        }
        Dgp::NormalViolation => {
            let (mean, sd) = violation_params(d, t);
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * z
        }
        _ => {
            let theta = dgp.mixture_theta().expect("mixture dgp");
            let u: f64 = rng.gen();
            let location = if u < theta {
                mixture_g_location(t)
            } else {
                mixture_h_location(d)
            };
            let z: f64 = rng.sample(StandardNormal);
            (location + MIXTURE_SCALE * z).exp()
        }
    }
}

/// Simulates the canonical lognormal mixture (`theta = 1/2`). With
/// `bin_width` set, outcomes are snapped to their bin label (origin 0) so
/// the emitted panel mirrors pre-binned production data.
pub fn simulate_example3(
    n_per_cell: usize,
    seed: u64,
    clusters: usize,
    bin_width: Option<f64>,
) -> Result<PanelDataset> {
    let panel = simulate(Dgp::Example3, n_per_cell, seed, clusters)?;
    match bin_width {
        None => Ok(panel),
        Some(width) => {
            let binning = Binning::new(width, 0.0)?;
            let rows = panel
                .rows()
                .iter()
                .map(|r| {
                    ObservationRow::new(
                        r.cluster_id.clone(),
                        r.group,
                        r.period,
                        binning.label(r.outcome)?,
                        r.weight,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            PanelDataset::new(
                rows,
                Provenance {
                    source: panel.provenance().source.clone(),
                    binning: Some(binning),
                },
            )
        }
    }
}

/// Outcome scale for the analytic mean oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleTransform {
    Levels,
    Log,
}

/// Mean of `theta * LogNormal(g) + (1 - theta) * LogNormal(h)` in levels or
/// logs. In levels each component contributes `exp(location + scale^2 / 2)`;
/// in logs it contributes its location.
pub fn lognormal_mixture_mean(
    theta: f64,
    g: (f64, f64),
    h: (f64, f64),
    transform: OracleTransform,
) -> f64 {
    match transform {
        OracleTransform::Levels => {
            let mean = |(loc, scale): (f64, f64)| (loc + 0.5 * scale * scale).exp();
            theta * mean(g) + (1.0 - theta) * mean(h)
        }
        OracleTransform::Log => theta * g.0 + (1.0 - theta) * h.0,
    }
}

/// Analytic mean of cell (group `d`, period `t`) under the canonical
/// mixture.
pub fn example3_oracle_mean(d: u8, t: u8, transform: OracleTransform) -> f64 {
    lognormal_mixture_mean(
        0.5,
        (mixture_g_location(t), MIXTURE_SCALE),
        (mixture_h_location(d), MIXTURE_SCALE),
        transform,
    )
}

/// Analytic cell means for a DGP, in levels and (where the outcome is
/// almost-surely positive) in logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanOracle {
    pub levels: [[f64; 2]; 2],
    pub log: Option<[[f64; 2]; 2]>,
}

pub fn mean_oracle(dgp: &Dgp) -> MeanOracle {
    let mut levels = [[0.0; 2]; 2];
    let mut log = [[0.0; 2]; 2];
    match dgp {
        Dgp::Binary { p } => MeanOracle {
            levels: *p,
            log: None,
        },
        Dgp::NormalViolation => {
            for d in 0..2u8 {
                for t in 0..2u8 {
                    levels[d as usize][t as usize] = violation_params(d, t).0;
                }
            }
            MeanOracle { levels, log: None }
        }
        _ => {
            let theta = dgp.mixture_theta().expect("mixture dgp");
            for d in 0..2u8 {
                for t in 0..2u8 {
                    let g = (mixture_g_location(t), MIXTURE_SCALE);
                    let h = (mixture_h_location(d), MIXTURE_SCALE);
                    levels[d as usize][t as usize] =
                        lognormal_mixture_mean(theta, g, h, OracleTransform::Levels);
                    log[d as usize][t as usize] =
                        lognormal_mixture_mean(theta, g, h, OracleTransform::Log);
                }
            }
            MeanOracle {
                levels,
                log: Some(log),
            }
        }
    }
}

/// Builds the mixture recipe for a lognormal DGP with its components
/// discretized on a shared grid of the given width.
pub fn lognormal_case3_spec(theta: f64, bin_width: f64) -> Result<Case3Spec> {
    let components = AnalyticDistribution::discretize_common_grid(
        &[
            AnalyticDistribution::lognormal(mixture_g_location(0), MIXTURE_SCALE)?,
            AnalyticDistribution::lognormal(mixture_g_location(1), MIXTURE_SCALE)?,
            AnalyticDistribution::lognormal(mixture_h_location(0), MIXTURE_SCALE)?,
            AnalyticDistribution::lognormal(mixture_h_location(1), MIXTURE_SCALE)?,
        ],
        bin_width,
    )?;
    let [g0, g1, h0, h1]: [crate::distributions::DiscreteDistribution; 4] =
        components.try_into().expect("four components");
    Case3Spec::new(theta, g0, g1, h0, h1)
}

/// The canonical mixture quadruple (`theta = 1/2`) discretized at
/// `bin_width`.
pub fn example3_quadruple(bin_width: f64) -> Result<FourCells> {
    crate::mixture::build_case3_quadruple(&lognormal_case3_spec(0.5, bin_width)?)
}

/// Population cell distributions of the violation design, discretized at
/// `bin_width` (origin 0). Used as a pilot oracle: the implied counterfactual
/// of these population masses dips negative.
pub fn normal_violation_population_cells(bin_width: f64) -> Result<FourCells> {
    let make = |(mean, sd): (f64, f64)| AnalyticDistribution::normal(mean, sd);
    let cells = AnalyticDistribution::discretize_common_grid(
        &[
            make(violation_params(0, 0))?,
            make(violation_params(0, 1))?,
            make(violation_params(1, 0))?,
            make(violation_params(1, 1))?,
        ],
        bin_width,
    )?;
    let [c00, c01, c10, c11]: [crate::distributions::DiscreteDistribution; 4] =
        cells.try_into().expect("four cells");
    FourCells::from_distributions([[c00, c01], [c10, c11]])
}
