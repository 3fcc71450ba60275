//! Cluster bootstrap covariance of the implied-PMF estimate.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::distributions::Binning;
use crate::error::{Error, Result};
use crate::panel::PanelDataset;
use crate::simulate::{stream_rng, PHASE_BOOTSTRAP};

use super::Prepared;

/// Redraw budget per replicate when a draw empties a design cell.
const MAX_ATTEMPTS_PER_REPLICATE: u64 = 10;

/// Bootstrap covariance of the implied PMF over the observed support.
#[derive(Debug, Clone)]
pub struct BootstrapCovariance {
    /// Support the moments live on (post bin-pruning).
    pub support: Vec<f64>,
    /// Observed (full-sample) implied PMF on that support.
    pub observed: Vec<f64>,
    /// Sample covariance across replicates (divisor `B - 1`).
    pub matrix: DMatrix<f64>,
    /// Replicate draws discarded because a required cell came back empty.
    pub redraw_count: usize,
}

/// Resamples whole clusters with replacement (as many clusters as observed,
/// keeping every row of a drawn cluster with its weight) and recomputes the
/// implied PMF per replicate on the fixed observed support; bins a replicate
/// does not touch contribute zero. Bad draws — those that empty one of the
/// three estimating cells — are redrawn up to 10 times per replicate, and
/// more than half the replicates needing a redraw is reported as a
/// numerical failure rather than a usable covariance.
///
/// Replicate `b`, attempt `a` consumes the dedicated ChaCha8 stream
/// `10 b + a` of the `(seed, bootstrap)` key, so the result is identical
/// whatever the parallel schedule.
pub fn cluster_bootstrap_cov(
    panel: &PanelDataset,
    binning: Option<&Binning>,
    drop_empty_bins: bool,
    bootstrap_reps: usize,
    seed: u64,
) -> Result<BootstrapCovariance> {
    if bootstrap_reps < 100 {
        return Err(Error::Input(format!(
            "need at least 100 bootstrap replicates, got {bootstrap_reps}"
        )));
    }
    let prep = Prepared::build(panel, binning, drop_empty_bins)?;
    let k = prep.support.len();
    let n_clusters = prep.clusters.len();

    struct Replicate {
        implied: Vec<f64>,
        first_attempt_failed: bool,
        redraws: usize,
    }

    let run_replicate = |b: usize| -> Result<Replicate> {
        let mut first_attempt_failed = false;
        for attempt in 0..MAX_ATTEMPTS_PER_REPLICATE {
            let mut rng = stream_rng(
                seed,
                PHASE_BOOTSTRAP,
                b as u64 * MAX_ATTEMPTS_PER_REPLICATE + attempt,
            );
            let mut mass = vec![0.0f64; 3 * k];
            let mut totals = [0.0f64; 3];
            for _ in 0..n_clusters {
                let drawn = rng.gen_range(0..n_clusters);
                for &(cell, idx, weight) in &prep.clusters[drawn] {
                    mass[cell as usize * k + idx as usize] += weight;
                    totals[cell as usize] += weight;
                }
            }
            if totals.iter().any(|&t| t <= 0.0) {
                if attempt == 0 {
                    first_attempt_failed = true;
                }
                continue;
            }
            let implied = (0..k)
                .map(|j| {
                    mass[2 * k + j] / totals[2] + mass[k + j] / totals[1] - mass[j] / totals[0]
                })
                .collect();
            return Ok(Replicate {
                implied,
                first_attempt_failed,
                redraws: first_attempt_failed as usize,
            });
        }
        Err(Error::Numerical(format!(
            "bootstrap replicate {b} emptied a design cell {MAX_ATTEMPTS_PER_REPLICATE} times in a row; \
             the panel is too small for cluster resampling"
        )))
    };

    let replicates: Vec<Replicate> = (0..bootstrap_reps)
        .into_par_iter()
        .map(run_replicate)
        .collect::<Result<_>>()?;

    let failed_first = replicates.iter().filter(|r| r.first_attempt_failed).count();
    if failed_first * 2 > bootstrap_reps {
        return Err(Error::Numerical(format!(
            "{failed_first} of {bootstrap_reps} bootstrap draws emptied a design cell; \
             more clusters or more data are needed for reliable resampling"
        )));
    }
    let redraw_count = replicates.iter().map(|r| r.redraws).sum();

    // sample covariance across replicates, accumulated in fixed order
    let b = bootstrap_reps as f64;
    let mut mean = vec![0.0f64; k];
    for rep in &replicates {
        for (m, &x) in mean.iter_mut().zip(&rep.implied) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= b;
    }
    let mut matrix = DMatrix::<f64>::zeros(k, k);
    for rep in &replicates {
        for i in 0..k {
            let di = rep.implied[i] - mean[i];
            for j in 0..=i {
                matrix[(i, j)] += di * (rep.implied[j] - mean[j]);
            }
        }
    }
    let denom = b - 1.0;
    for i in 0..k {
        for j in 0..=i {
            let v = matrix[(i, j)] / denom;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }

    Ok(BootstrapCovariance {
        support: prep.support,
        observed: prep.observed,
        matrix,
        redraw_count,
    })
}
