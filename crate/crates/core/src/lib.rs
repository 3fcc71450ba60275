//! Functional-form diagnostics for two-group, two-period
//! difference-in-differences designs.
//!
//! A difference-in-differences estimate is only as credible as its parallel
//! trends assumption, and parallel trends in levels says nothing about
//! parallel trends in logs. This crate implements the distribution-level
//! toolkit for interrogating that sensitivity:
//!
//! * [`distributions`] — weighted discrete distributions, binning, monotone
//!   transforms, total variation distance;
//! * [`panel`] — CSV ingestion of `(cluster, group, period, outcome,
//!   weight)` rows and the four cell distributions;
//! * [`counterfactual`] — the additive implied counterfactual, the
//!   changes-in-changes counterfactual, CDF-level parallelism checks, and
//!   transformed difference-in-differences effects;
//! * [`mixture`] — decomposition of distribution pairs into shared and
//!   residual components, and generators for quadruples that are immune to
//!   monotone re-scaling of the outcome;
//! * [`inference`] — a cluster-bootstrap falsification test comparing the
//!   minimum studentized implied mass against a least-favorable
//!   moment-inequality critical value;
//! * [`simulate`] — seeded, schedule-independent panel generators with
//!   analytic mean oracles.
//!
//! Everything is deterministic given the master seed: simulation, bootstrap
//! and critical-value draws each consume dedicated ChaCha8 streams indexed
//! by replicate, so any degree of parallelism produces identical results.

pub mod analytic;
pub mod counterfactual;
pub mod distributions;
pub mod error;
pub mod inference;
pub mod mixture;
pub mod panel;
pub mod simulate;

mod numeric;

pub use analytic::AnalyticDistribution;
pub use counterfactual::{
    check_cdf_parallel, cic_counterfactual, counterfactual_divergence, did_att,
    implied_counterfactual, CdfParallelCheck, CounterfactualInputs, Divergence,
    ImpliedCounterfactual,
};
pub use distributions::{
    align_supports, total_variation, Binning, CumulativeCurve, DiscreteDistribution,
    MonotoneTransform, SignedMeasure,
};
pub use error::{Error, Result};
pub use inference::{
    cluster_bootstrap_cov, estimate_implied_pmf, falsification_test, least_favorable_cv,
    studentized_min, BootstrapCovariance, Decision, StudentizedMin, TestConfig, TestResult,
};
pub use mixture::{build_case3_quadruple, case3_representation, decompose, Case3Spec,
    Degeneracy, MixtureDecomposition};
pub use panel::{cell_distributions, FourCells, ObservationRow, PanelDataset, Provenance};
pub use simulate::{
    example3_oracle_mean, example3_quadruple, lognormal_mixture_mean, mean_oracle, simulate,
    simulate_example3, Dgp, MeanOracle, OracleTransform,
};
