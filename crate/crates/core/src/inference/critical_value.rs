//! Least-favorable critical values for moment-inequality minima.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::simulate::{stream_rng, PHASE_CRITICAL_VALUE};

pub(crate) struct LfSimulation {
    pub minima: Vec<f64>,
    pub clipped: usize,
    /// A clipped eigenvalue was materially negative (beyond float noise).
    pub clipped_meaningfully: bool,
}

/// Draws `sims` minima of a zero-mean Gaussian vector with the given
/// correlation. Simulation `s` uses ChaCha8 stream `s` of the
/// `(seed, critical-value)` key; the first standard normal draw of each
/// stream is shared across dimensions, so a perfectly correlated matrix
/// reproduces the one-dimensional minima exactly.
pub(crate) fn lf_minima(correlation: &DMatrix<f64>, sims: usize, seed: u64) -> Result<LfSimulation> {
    let k = correlation.nrows();
    if correlation.ncols() != k || k == 0 {
        return Err(Error::Input(format!(
            "correlation matrix must be square and non-empty, got {}x{}",
            k,
            correlation.ncols()
        )));
    }
    let scale = correlation.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for i in 0..k {
        for j in 0..i {
            if (correlation[(i, j)] - correlation[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::Input("correlation matrix must be symmetric".into()));
            }
        }
    }

    // PSD projection by eigenvalue clipping; the factor A = V sqrt(L) maps
    // iid standard normals to the target correlation
    let eigen = SymmetricEigen::new(correlation.clone());
    let max_eigen = eigen.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let mut clipped = 0;
    let mut clipped_meaningfully = false;
    let clipped_sqrt: Vec<f64> = eigen
        .eigenvalues
        .iter()
        .map(|&v| {
            if v < 0.0 {
                clipped += 1;
                if v < -1e-8 * max_eigen.max(1.0) {
                    clipped_meaningfully = true;
                }
                0.0
            } else {
                v.sqrt()
            }
        })
        .collect();
    let mut factor = eigen.eigenvectors;
    for (mut column, s) in factor.column_iter_mut().zip(&clipped_sqrt) {
        // canonical sign: largest-magnitude loading positive
        let mut dominant = 0;
        for (i, v) in column.iter().enumerate() {
            if v.abs() > column[dominant].abs() {
                dominant = i;
            }
        }
        let sign = if column[dominant] < 0.0 { -1.0 } else { 1.0 };
        column *= s * sign;
    }

    let minima: Vec<f64> = (0..sims)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, PHASE_CRITICAL_VALUE, s as u64);
            let eps = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let z = &factor * eps;
            z.iter().copied().fold(f64::INFINITY, f64::min)
        })
        .collect();

    Ok(LfSimulation {
        minima,
        clipped,
        clipped_meaningfully,
    })
}

/// Lower empirical `alpha`-quantile: the ceil(alpha n)-th smallest value,
/// with a small slack so float round-up cannot shift the order statistic.
pub(crate) fn lower_quantile(values: &[f64], alpha: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite minima"));
    let n = sorted.len();
    let rank = ((alpha * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Critical value for the minimum of `k` studentized moments under the
/// least-favorable configuration (all moments mean zero with the given
/// correlation): the empirical `alpha`-quantile of simulated minima.
pub fn least_favorable_cv(
    correlation: &DMatrix<f64>,
    alpha: f64,
    sims: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Input(format!(
            "alpha must lie strictly inside (0, 1), got {alpha}"
        )));
    }
    if sims == 0 {
        return Err(Error::Input("need at least one simulation".into()));
    }
    let sim = lf_minima(correlation, sims, seed)?;
    Ok(lower_quantile(&sim.minima, alpha))
}
