//! JSON wire formats for distribution inputs.

use serde::{Deserialize, Serialize};

use didform::distributions::DiscreteDistribution;
use didform::panel::FourCells;

use crate::CliError;

/// Four cell PMFs on a shared support:
/// `{"support": [...], "cells": {"d0t0": [...], "d0t1": [...], "d1t0": [...], "d1t1": [...]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadrupleFile {
    pub support: Vec<f64>,
    pub cells: QuadrupleCells,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadrupleCells {
    pub d0t0: Vec<f64>,
    pub d0t1: Vec<f64>,
    pub d1t0: Vec<f64>,
    pub d1t1: Vec<f64>,
}

impl QuadrupleFile {
    pub fn into_cells(self) -> Result<FourCells, CliError> {
        let build = |masses: Vec<f64>, name: &str| {
            DiscreteDistribution::new(self.support.clone(), masses, 1.0).map_err(|e| {
                CliError::input(format!("cell {name}: {e}"))
            })
        };
        let d0t0 = build(self.cells.d0t0, "d0t0")?;
        let d0t1 = build(self.cells.d0t1, "d0t1")?;
        let d1t0 = build(self.cells.d1t0, "d1t0")?;
        let d1t1 = build(self.cells.d1t1, "d1t1")?;
        FourCells::from_distributions([[d0t0, d0t1], [d1t0, d1t1]])
            .map_err(|e| CliError::input(format!("invalid quadruple: {e}")))
    }
}

/// Two aligned PMFs: `{"support": [...], "f1": [...], "f2": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFile {
    pub support: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl PairFile {
    pub fn into_distributions(
        self,
    ) -> Result<(DiscreteDistribution, DiscreteDistribution), CliError> {
        let f1 = DiscreteDistribution::new(self.support.clone(), self.f1, 1.0)
            .map_err(|e| CliError::input(format!("f1: {e}")))?;
        let f2 = DiscreteDistribution::new(self.support, self.f2, 1.0)
            .map_err(|e| CliError::input(format!("f2: {e}")))?;
        Ok((f1, f2))
    }
}

/// Serializable PMF used in decomposition output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfJson {
    pub support: Vec<f64>,
    pub masses: Vec<f64>,
}

impl From<&DiscreteDistribution> for PmfJson {
    fn from(d: &DiscreteDistribution) -> Self {
        Self {
            support: d.support().to_vec(),
            masses: d.masses().to_vec(),
        }
    }
}
