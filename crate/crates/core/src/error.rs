//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by data ingestion, distribution construction, transforms
/// and the inference pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid argument or degenerate input (empty data, non-finite value,
    /// out-of-range parameter, malformed matrix, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A required CSV column is missing.
    #[error("missing required column `{column}`")]
    Schema { column: String },

    /// A CSV cell could not be parsed. `row` is 1-based and counts data rows
    /// (the header is row 0).
    #[error("row {row}: {detail}")]
    Parse { row: usize, detail: String },

    /// A structurally valid input violates a dataset-level invariant
    /// (empty design cell, too few clusters, ...).
    #[error("invalid dataset: {0}")]
    Validation(String),

    /// A transform was applied outside its domain (e.g. `log` on a
    /// non-positive support point).
    #[error("domain error: {0}")]
    Domain(String),

    /// A transform mapped two distinct support points to the same value.
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),

    /// A numerical procedure could not produce a usable result
    /// (degenerate bootstrap, no usable moments, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
