//! Strictly monotone outcome transforms.

use crate::error::{Error, Result};

/// A strictly increasing transform of the outcome scale.
///
/// `IndicatorShift` is the map `y -> y - 1[y <= threshold]`: it subtracts one
/// below the threshold and nothing above it, which keeps it strictly
/// increasing while moving exactly one unit of "CDF weight". Sweeping the
/// threshold over the support turns mean comparisons into CDF comparisons,
/// which makes it the sharpest probe for functional-form sensitivity.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneTransform {
    Identity,
    /// Natural log; requires a strictly positive support.
    Log,
    /// `y -> slope * y + intercept` with `slope > 0`.
    Affine { slope: f64, intercept: f64 },
    /// `y -> y - 1[y <= threshold]`.
    IndicatorShift { threshold: f64 },
    /// Explicit lookup table; both columns strictly increasing, and every
    /// support point the transform is applied to must appear in `inputs`.
    Table { inputs: Vec<f64>, outputs: Vec<f64> },
}

impl MonotoneTransform {
    pub fn identity() -> Self {
        Self::Identity
    }

    pub fn log() -> Self {
        Self::Log
    }

    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope > 0.0) || !slope.is_finite() {
            return Err(Error::Input(format!(
                "affine transform needs a positive slope, got {slope}"
            )));
        }
        if !intercept.is_finite() {
            return Err(Error::Input("affine intercept must be finite".into()));
        }
        Ok(Self::Affine { slope, intercept })
    }

    pub fn indicator_shift(threshold: f64) -> Result<Self> {
        if !threshold.is_finite() {
            return Err(Error::Input("indicator threshold must be finite".into()));
        }
        Ok(Self::IndicatorShift { threshold })
    }

    pub fn table(inputs: Vec<f64>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.len() != outputs.len() || inputs.is_empty() {
            return Err(Error::Input(
                "table transform needs matching, non-empty input/output columns".into(),
            ));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&inputs) || !increasing(&outputs) {
            return Err(Error::Input(
                "table transform columns must be strictly increasing".into(),
            ));
        }
        Ok(Self::Table { inputs, outputs })
    }

    /// Applies the transform to one point.
    pub fn apply(&self, y: f64) -> Result<f64> {
        match self {
            Self::Identity => Ok(y),
            Self::Log => {
                if y > 0.0 {
                    Ok(y.ln())
                } else {
                    Err(Error::Domain(format!("log undefined at support point {y}")))
                }
            }
            Self::Affine { slope, intercept } => Ok(slope * y + intercept),
            Self::IndicatorShift { threshold } => {
                Ok(if y <= *threshold { y - 1.0 } else { y })
            }
            Self::Table { inputs, outputs } => {
                match inputs.binary_search_by(|x| x.partial_cmp(&y).expect("finite table")) {
                    Ok(i) => Ok(outputs[i]),
                    Err(_) => Err(Error::Domain(format!(
                        "table transform has no entry for support point {y}"
                    ))),
                }
            }
        }
    }

    /// Maps a strictly increasing support pointwise, verifying the image is
    /// still strictly increasing.
    pub fn map_support(&self, support: &[f64]) -> Result<Vec<f64>> {
        let mapped: Vec<f64> = support.iter().map(|&y| self.apply(y)).collect::<Result<_>>()?;
        for w in mapped.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Monotonicity(format!(
                    "support points mapped to {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(mapped)
    }
}
