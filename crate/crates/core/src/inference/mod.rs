//! Falsification test for distribution-level parallel trends.
//!
//! Pipeline: estimate the implied counterfactual PMF from sample analogs,
//! estimate its sampling covariance with a cluster bootstrap, studentize
//! every bin, and compare the minimum studentized value against a
//! least-favorable critical value for moment inequalities — the critical
//! value that assumes every inequality binds (see Canay & Shaikh 2017,
//! §4.1.1, for the general construction). Rejection means no proper
//! distribution is compatible with the observed cell trends, i.e. the
//! design's validity depends on the chosen functional form.

mod bootstrap;
mod critical_value;

pub use bootstrap::{cluster_bootstrap_cov, BootstrapCovariance};
pub use critical_value::least_favorable_cv;

use nalgebra::DMatrix;

use crate::counterfactual::implied_counterfactual;
use crate::distributions::{Binning, SignedMeasure};
use crate::error::{Error, Result};
use crate::panel::{cell_distributions, PanelDataset};

/// Parameters of the falsification test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    /// Nominal level, in (0, 1).
    pub alpha: f64,
    /// Cluster bootstrap replicates (>= 100).
    pub bootstrap_reps: usize,
    /// Gaussian simulations behind the critical value (>= 1000).
    pub cv_sims: usize,
    /// Master seed; every random draw in the test derives from it.
    pub seed: u64,
    /// Optional outcome binning applied before estimation.
    pub binning: Option<Binning>,
    /// Lower bound applied to estimated standard errors (0 disables).
    pub min_se_floor: f64,
    /// Restrict the support to bins where at least one of the three cells
    /// entering the implied PMF carries positive mass.
    pub drop_empty_bins: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bootstrap_reps: 1000,
            cv_sims: 10_000,
            seed: 0,
            binning: None,
            min_se_floor: 0.0,
            drop_empty_bins: true,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Input(format!(
                "alpha must lie strictly inside (0, 1), got {}",
                self.alpha
            )));
        }
        if self.bootstrap_reps < 100 {
            return Err(Error::Input(format!(
                "need at least 100 bootstrap replicates, got {}",
                self.bootstrap_reps
            )));
        }
        if self.cv_sims < 1000 {
            return Err(Error::Input(format!(
                "need at least 1000 critical-value simulations, got {}",
                self.cv_sims
            )));
        }
        if !(self.min_se_floor >= 0.0) || !self.min_se_floor.is_finite() {
            return Err(Error::Input(format!(
                "min_se_floor must be a non-negative number, got {}",
                self.min_se_floor
            )));
        }
        Ok(())
    }
}

/// Test decision at the configured level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    FailToReject,
}

/// Per-bin diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinFlags {
    /// Estimated implied mass is negative.
    pub negative_estimate: bool,
    /// Standard error is exactly zero (after the optional floor).
    pub zero_se: bool,
    /// Bin does not contribute to the minimum statistic.
    pub excluded: bool,
}

/// Summary of the bootstrap correlation matrix fed to the critical value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSummary {
    /// Number of moments entering the critical-value simulation.
    pub dim: usize,
    pub min_offdiag: Option<f64>,
    pub max_offdiag: Option<f64>,
    /// Eigenvalues clipped to zero when projecting to the PSD cone.
    pub clipped_eigenvalues: usize,
}

/// Full output of the falsification test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Support points of the tested moments, ascending.
    pub support: Vec<f64>,
    /// Implied counterfactual PMF estimate per support point.
    pub implied_pmf: Vec<f64>,
    /// Bootstrap standard error per support point (post-floor).
    pub standard_errors: Vec<f64>,
    /// Studentized value per support point; `None` for bins that cannot be
    /// studentized (zero standard error).
    pub studentized: Vec<Option<f64>>,
    pub flags: Vec<BinFlags>,
    /// Minimum studentized value. `f64::NEG_INFINITY` when a zero-variance
    /// bin has a negative estimate (deterministic rejection).
    pub statistic: f64,
    /// Support point attaining the minimum.
    pub statistic_at: Option<f64>,
    pub critical_value: f64,
    /// Fraction of simulated least-favorable minima strictly below the
    /// statistic.
    pub p_value: f64,
    /// `Reject` exactly when `statistic < critical_value`; equivalently
    /// `p_value < alpha` up to ties in the simulated minima.
    pub decision: Decision,
    pub correlation: CorrelationSummary,
    pub config: TestConfig,
    pub warnings: Vec<String>,
}

/// Sample-analog estimate of the implied counterfactual PMF.
///
/// With `drop_empty_bins` the support is restricted to bins where at least
/// one of the three cells used by the construction has positive mass; the
/// dropped bins carry an exact zero and stay uninformative under
/// resampling.
pub fn estimate_implied_pmf(
    panel: &PanelDataset,
    binning: Option<&Binning>,
    drop_empty_bins: bool,
) -> Result<SignedMeasure> {
    let prep = Prepared::build(panel, binning, drop_empty_bins)?;
    SignedMeasure::new(prep.support, prep.observed)
}

/// Minimum studentized moment.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentizedMin {
    /// `min_y f(y) / se(y)`; `NEG_INFINITY` when some zero-se bin is
    /// negative.
    pub statistic: f64,
    /// Support point attaining the minimum.
    pub argmin: Option<f64>,
    /// Per-bin studentized values (`None` where the bin is not
    /// studentizable).
    pub studentized: Vec<Option<f64>>,
}

/// Studentizes each mass by its standard error and takes the minimum.
/// Bins with zero standard error are excluded when their estimate is
/// non-negative and force a `NEG_INFINITY` statistic when negative: a
/// negative estimate with no sampling variability is incompatible with the
/// null by itself.
pub fn studentized_min(measure: &SignedMeasure, standard_errors: &[f64]) -> Result<StudentizedMin> {
    if standard_errors.len() != measure.len() {
        return Err(Error::Input(format!(
            "{} standard errors for {} support points",
            standard_errors.len(),
            measure.len()
        )));
    }
    if let Some(se) = standard_errors.iter().find(|se| !(**se >= 0.0)) {
        return Err(Error::Input(format!(
            "standard errors must be non-negative, got {se}"
        )));
    }

    let mut studentized: Vec<Option<f64>> = vec![None; measure.len()];
    let mut statistic = f64::INFINITY;
    let mut argmin = None;
    let mut forced = false;
    for (i, (&f, &se)) in measure.masses().iter().zip(standard_errors).enumerate() {
        if se == 0.0 {
            if f < 0.0 && !forced {
                statistic = f64::NEG_INFINITY;
                argmin = Some(measure.support()[i]);
                forced = true;
            }
            continue;
        }
        let value = f / se;
        studentized[i] = Some(value);
        if !forced && value < statistic {
            statistic = value;
            argmin = Some(measure.support()[i]);
        }
    }
    if argmin.is_none() {
        return Err(Error::Numerical(
            "no support point could be studentized (all zero standard errors with non-negative estimates)"
                .into(),
        ));
    }
    Ok(StudentizedMin {
        statistic,
        argmin,
        studentized,
    })
}

/// Runs the complete falsification test.
pub fn falsification_test(panel: &PanelDataset, config: &TestConfig) -> Result<TestResult> {
    config.validate()?;
    let mut warnings = Vec::new();

    let boot = cluster_bootstrap_cov(
        panel,
        config.binning.as_ref(),
        config.drop_empty_bins,
        config.bootstrap_reps,
        config.seed,
    )?;
    if boot.redraw_count > 0 {
        warnings.push(format!(
            "{} bootstrap draws left a design cell empty and were redrawn",
            boot.redraw_count
        ));
    }

    let measure = SignedMeasure::new(boot.support.clone(), boot.observed.clone())?;
    let k = measure.len();

    let raw_sd: Vec<f64> = (0..k).map(|i| boot.matrix[(i, i)].max(0.0).sqrt()).collect();
    let standard_errors: Vec<f64> = raw_sd
        .iter()
        .map(|&sd| sd.max(config.min_se_floor))
        .collect();
    let floored = raw_sd
        .iter()
        .zip(&standard_errors)
        .filter(|(raw, used)| raw < used)
        .count();
    if floored > 0 {
        warnings.push(format!(
            "standard error floor {} applied to {floored} bins",
            config.min_se_floor
        ));
    }

    let min_stat = studentized_min(&measure, &standard_errors)?;

    // moments with positive (post-floor) standard error enter the
    // critical-value simulation
    let usable: Vec<usize> = (0..k).filter(|&i| standard_errors[i] > 0.0).collect();
    let zero_se_bins = k - usable.len();
    if zero_se_bins > 0 {
        warnings.push(format!("{zero_se_bins} bins have zero bootstrap variance"));
    }

    let (critical_value, p_value, correlation) = if usable.is_empty() {
        // only reachable when the statistic is -inf: every bin has zero
        // variance and some estimate is negative
        warnings.push(
            "no moments with positive variance; rejection is deterministic".to_string(),
        );
        (
            0.0,
            0.0,
            CorrelationSummary {
                dim: 0,
                min_offdiag: None,
                max_offdiag: None,
                clipped_eigenvalues: 0,
            },
        )
    } else {
        let corr = correlation_matrix(&boot.matrix, &raw_sd, &usable);
        let sim = critical_value::lf_minima(&corr, config.cv_sims, config.seed)?;
        if sim.clipped_meaningfully {
            warnings.push(format!(
                "bootstrap correlation projected to the PSD cone ({} eigenvalues clipped)",
                sim.clipped
            ));
        }
        let cv = critical_value::lower_quantile(&sim.minima, config.alpha);
        let below = sim
            .minima
            .iter()
            .filter(|&&m| m < min_stat.statistic)
            .count();
        let p = below as f64 / sim.minima.len() as f64;
        let summary = summarize_correlation(&corr, sim.clipped);
        (cv, p, summary)
    };

    let decision = if min_stat.statistic < critical_value {
        Decision::Reject
    } else {
        Decision::FailToReject
    };

    let flags: Vec<BinFlags> = (0..k)
        .map(|i| {
            let zero_se = standard_errors[i] == 0.0;
            let negative_estimate = measure.masses()[i] < 0.0;
            BinFlags {
                negative_estimate,
                zero_se,
                excluded: min_stat.studentized[i].is_none() && !(zero_se && negative_estimate),
            }
        })
        .collect();

    Ok(TestResult {
        support: boot.support,
        implied_pmf: boot.observed,
        standard_errors,
        studentized: min_stat.studentized,
        flags,
        statistic: min_stat.statistic,
        statistic_at: min_stat.argmin,
        critical_value,
        p_value,
        decision,
        correlation,
        config: config.clone(),
        warnings,
    })
}

fn correlation_matrix(cov: &DMatrix<f64>, raw_sd: &[f64], usable: &[usize]) -> DMatrix<f64> {
    let m = usable.len();
    DMatrix::from_fn(m, m, |a, b| {
        if a == b {
            return 1.0;
        }
        let (i, j) = (usable[a], usable[b]);
        if raw_sd[i] == 0.0 || raw_sd[j] == 0.0 {
            // floored bins have no sampling correlation to speak of
            return 0.0;
        }
        (cov[(i, j)] / (raw_sd[i] * raw_sd[j])).clamp(-1.0, 1.0)
    })
}

fn summarize_correlation(corr: &DMatrix<f64>, clipped: usize) -> CorrelationSummary {
    let dim = corr.nrows();
    let mut min_offdiag = f64::INFINITY;
    let mut max_offdiag = f64::NEG_INFINITY;
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                min_offdiag = min_offdiag.min(corr[(i, j)]);
                max_offdiag = max_offdiag.max(corr[(i, j)]);
            }
        }
    }
    CorrelationSummary {
        dim,
        min_offdiag: (dim > 1).then_some(min_offdiag),
        max_offdiag: (dim > 1).then_some(max_offdiag),
        clipped_eigenvalues: clipped,
    }
}

/// Rows reduced to what the implied-PMF estimator needs, grouped by
/// cluster, with bins resolved to indices on the fixed observed support.
pub(crate) struct Prepared {
    pub support: Vec<f64>,
    /// Observed implied PMF on `support`.
    pub observed: Vec<f64>,
    /// Per cluster: `(cell, support index, weight)` for rows in the three
    /// cells the estimator reads. Cell coding: 0 = comparison-pre,
    /// 1 = comparison-post, 2 = treated-pre.
    pub clusters: Vec<Vec<(u8, u32, f64)>>,
}

impl Prepared {
    pub fn build(
        panel: &PanelDataset,
        binning: Option<&Binning>,
        drop_empty_bins: bool,
    ) -> Result<Self> {
        let cells = cell_distributions(panel, binning)?;
        let implied = implied_counterfactual(cells.counterfactual_inputs())?;

        let full_support = cells.support();
        let keep: Vec<usize> = (0..full_support.len())
            .filter(|&i| {
                if !drop_empty_bins {
                    return true;
                }
                cells.dist(1, 0).masses()[i] > 0.0
                    || cells.dist(0, 1).masses()[i] > 0.0
                    || cells.dist(0, 0).masses()[i] > 0.0
            })
            .collect();
        if keep.is_empty() {
            return Err(Error::Validation("no occupied bins in the three estimating cells".into()));
        }
        let support: Vec<f64> = keep.iter().map(|&i| full_support[i]).collect();
        let observed: Vec<f64> = keep.iter().map(|&i| implied.pmf.masses()[i]).collect();

        // resolve each estimating row to (cell, support index, weight)
        let cell_code = |group: u8, period: u8| -> Option<u8> {
            match (group, period) {
                (0, 0) => Some(0),
                (0, 1) => Some(1),
                (1, 0) => Some(2),
                _ => None, // treated-post rows never enter the estimator
            }
        };
        let mut order: Vec<&str> = Vec::new();
        let mut cluster_index: std::collections::HashMap<&str, usize> =
            std::collections::HashMap::new();
        for row in panel.rows() {
            if !cluster_index.contains_key(row.cluster_id.as_str()) {
                cluster_index.insert(row.cluster_id.as_str(), order.len());
                order.push(row.cluster_id.as_str());
            }
        }
        let mut clusters: Vec<Vec<(u8, u32, f64)>> = vec![Vec::new(); order.len()];
        for row in panel.rows() {
            let Some(cell) = cell_code(row.group, row.period) else {
                continue;
            };
            let label = match binning {
                Some(b) => b.label(row.outcome)?,
                None => row.outcome,
            };
            let idx = support
                .binary_search_by(|probe| probe.partial_cmp(&label).expect("finite support"))
                .map_err(|_| {
                    Error::Numerical(format!("bin {label} missing from the observed support"))
                })?;
            let c = cluster_index[row.cluster_id.as_str()];
            clusters[c].push((cell, idx as u32, row.weight));
        }
        Ok(Self {
            support,
            observed,
            clusters,
        })
    }
}

#[cfg(test)]
mod tests;
