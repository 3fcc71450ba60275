//! Discretization of analytic distributions onto finite bin grids.
//!
//! Quadruple constructions and simulation oracles need exact bin masses for
//! normal and lognormal components. Grids truncate at the 1e-8 and 1 - 1e-8
//! quantiles and fold the tail mass into the end bins, so masses always sum
//! to one exactly up to CDF rounding.

use statrs::distribution::{ContinuousCDF, LogNormal, Normal};

use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};

const TAIL_QUANTILE: f64 = 1e-8;

/// A continuous distribution with closed-form CDF and quantile function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticDistribution {
    Normal { mean: f64, sd: f64 },
    /// Lognormal with log-scale location and shape: `exp(N(location, scale^2))`.
    LogNormal { location: f64, scale: f64 },
}

impl AnalyticDistribution {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
            return Err(Error::Input(format!(
                "normal requires finite mean and positive sd, got ({mean}, {sd})"
            )));
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn lognormal(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !location.is_finite() {
            return Err(Error::Input(format!(
                "lognormal requires finite location and positive scale, got ({location}, {scale})"
            )));
        }
        Ok(Self::LogNormal { location, scale })
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").cdf(y),
            Self::LogNormal { location, scale } => {
                if y <= 0.0 {
                    0.0
                } else {
                    LogNormal::new(location, scale).expect("validated").cdf(y)
                }
            }
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => {
                Normal::new(mean, sd).expect("validated").inverse_cdf(q)
            }
            Self::LogNormal { location, scale } => {
                LogNormal::new(location, scale).expect("validated").inverse_cdf(q)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } => mean,
            Self::LogNormal { location, scale } => (location + 0.5 * scale * scale).exp(),
        }
    }

    /// Mean of the log of a draw (lognormal only).
    pub fn log_mean(&self) -> Result<f64> {
        match *self {
            Self::LogNormal { location, .. } => Ok(location),
            Self::Normal { .. } => Err(Error::Domain(
                "log mean of a normal outcome is not defined on all of its support".into(),
            )),
        }
    }

    /// Discretizes onto bins of `width` anchored at `origin`, covering the
    /// quantile range [1e-8, 1 - 1e-8]; tail mass folds into the end bins.
    pub fn discretize(&self, width: f64, origin: f64) -> Result<DiscreteDistribution> {
        let lo = self.quantile(TAIL_QUANTILE);
        let hi = self.quantile(1.0 - TAIL_QUANTILE);
        discretize_range(&[*self], width, origin, lo, hi)
            .map(|mut v| v.pop().expect("one distribution"))
    }

    /// Discretizes several distributions onto one shared grid spanning the
    /// union of their quantile ranges, so the results are directly
    /// comparable bin by bin.
    pub fn discretize_common_grid(
        dists: &[AnalyticDistribution],
        width: f64,
    ) -> Result<Vec<DiscreteDistribution>> {
        if dists.is_empty() {
            return Err(Error::Input("no distributions to discretize".into()));
        }
        let lo = dists
            .iter()
            .map(|d| d.quantile(TAIL_QUANTILE))
            .fold(f64::INFINITY, f64::min);
        let hi = dists
            .iter()
            .map(|d| d.quantile(1.0 - TAIL_QUANTILE))
            .fold(f64::NEG_INFINITY, f64::max);
        discretize_range(dists, width, 0.0, lo, hi)
    }
}

fn discretize_range(
    dists: &[AnalyticDistribution],
    width: f64,
    origin: f64,
    lo: f64,
    hi: f64,
) -> Result<Vec<DiscreteDistribution>> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::Input(format!("bin width must be positive, got {width}")));
    }
    let first = ((lo - origin) / width).floor() as i64;
    let last = ((hi - origin) / width).floor() as i64;
    let n = (last - first + 1) as usize;
    if n < 2 {
        return Err(Error::Input(
            "bin width too coarse for the distribution's range".into(),
        ));
    }
    let support: Vec<f64> = (first..=last).map(|k| origin + k as f64 * width).collect();
    dists
        .iter()
        .map(|d| {
            let mut masses = Vec::with_capacity(n);
            let mut prev_cdf = 0.0; // lower tail folded into the first bin
            for k in first..last {
                let right = origin + (k + 1) as f64 * width;
                let c = d.cdf(right);
                masses.push((c - prev_cdf).max(0.0));
                prev_cdf = c;
            }
            masses.push((1.0 - prev_cdf).max(0.0)); // upper tail folds into the last bin
            DiscreteDistribution::new(support.clone(), masses, 1.0)
        })
        .collect()
}
