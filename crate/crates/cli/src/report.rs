//! Machine-readable report documents.
//!
//! Reports are single JSON objects with a pinned `schema_version`. Output is
//! byte-identical for identical inputs and flags: no timestamps, no
//! environment-dependent fields, and float serialization uses the shortest
//! round-tripping form.

use serde::{Deserialize, Serialize};

use didform::inference::{BinFlags, Decision, TestResult};

pub const SCHEMA_VERSION: u32 = 1;

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

/// Configuration echo embedded in every test report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub bootstrap_reps: usize,
    pub cv_sims: usize,
    pub seed: u64,
    pub bin_width: Option<f64>,
    pub bin_origin: Option<f64>,
    pub zero_bin: bool,
    pub min_se_floor: f64,
    pub drop_empty_bins: bool,
}

/// One row of the per-bin table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub support: f64,
    pub implied_pmf: f64,
    pub se: f64,
    /// Absent for bins that cannot be studentized.
    pub studentized: Option<f64>,
    pub flags: Vec<String>,
}

/// Headline numbers of the falsification test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    /// Minimum studentized value; absent exactly when the rejection is
    /// deterministic (a zero-variance bin with a negative estimate).
    pub statistic: Option<f64>,
    pub statistic_at: Option<f64>,
    pub deterministic_rejection: bool,
    pub critical_value: f64,
    pub p_value: f64,
    pub decision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEcho {
    pub dim: usize,
    pub min_offdiag: Option<f64>,
    pub max_offdiag: Option<f64>,
    pub clipped_eigenvalues: usize,
}

/// Mixture-structure diagnostics of the observed quadruple: the two
/// time-difference decompositions and the CDF-level deviation. On observed
/// data the treated-post cell contains treated outcomes, so the deviation
/// mixes trend differences with the treatment effect; the block is a
/// description of the data, not a test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionBlock {
    /// Total variation distance between treated post and pre distributions.
    pub theta_treated: f64,
    /// Total variation distance between comparison post and pre
    /// distributions.
    pub theta_comparison: f64,
    pub cdf_parallel_deviation: f64,
    pub deviation_at: f64,
}

/// Gap between the two counterfactual constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CicBlock {
    pub sup_cdf_distance: f64,
    pub positive_part_normalized: bool,
}

/// The full test report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    /// The invoked subcommand and flags, space-joined.
    pub command: String,
    pub config: ConfigEcho,
    pub bins: Vec<BinRow>,
    /// Absent when the pipeline failed before producing a decision.
    pub test: Option<TestSummary>,
    pub correlation: Option<CorrelationEcho>,
    pub decomposition: Option<DecompositionBlock>,
    pub cic: Option<CicBlock>,
    /// Human-readable failure detail when the test could not complete.
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

pub fn flag_names(flags: &BinFlags) -> Vec<String> {
    let mut names = Vec::new();
    if flags.negative_estimate {
        names.push("negative_estimate".to_string());
    }
    if flags.zero_se {
        names.push("zero_se".to_string());
    }
    if flags.excluded {
        names.push("excluded".to_string());
    }
    names
}

pub fn decision_name(decision: Decision) -> String {
    match decision {
        Decision::Reject => "reject".to_string(),
        Decision::FailToReject => "fail_to_reject".to_string(),
    }
}

/// Converts a core test result into report rows and summary.
pub fn from_test_result(result: &TestResult) -> (Vec<BinRow>, TestSummary, CorrelationEcho) {
    let bins = result
        .support
        .iter()
        .enumerate()
        .map(|(i, &support)| BinRow {
            support,
            implied_pmf: result.implied_pmf[i],
            se: result.standard_errors[i],
            studentized: result.studentized[i],
            flags: flag_names(&result.flags[i]),
        })
        .collect();
    let deterministic = result.statistic == f64::NEG_INFINITY;
    let summary = TestSummary {
        statistic: (!deterministic).then_some(result.statistic),
        statistic_at: result.statistic_at,
        deterministic_rejection: deterministic,
        critical_value: result.critical_value,
        p_value: result.p_value,
        decision: decision_name(result.decision),
    };
    let correlation = CorrelationEcho {
        dim: result.correlation.dim,
        min_offdiag: result.correlation.min_offdiag,
        max_offdiag: result.correlation.max_offdiag,
        clipped_eigenvalues: result.correlation.clipped_eigenvalues,
    };
    (bins, summary, correlation)
}

/// Serializes a report with a trailing newline; the byte stream is a pure
/// function of the document.
pub fn to_json_bytes<T: Serialize>(document: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(document).expect("report serialization");
    bytes.push(b'\n');
    bytes
}
