//! Two-group / two-period panel ingestion.
//!
//! The expected design has units observed in one of two groups (`group`:
//! 0 = comparison, 1 = treated) and one of two periods (`period`: 0 = pre,
//! 1 = post), with a cluster identifier for resampling-based inference and an
//! optional observation weight. Rows may be micro data (weight 1 per person)
//! or pre-aggregated shares (outcome = bin value, weight = share x
//! population); both produce the same cell distributions.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use crate::counterfactual::CounterfactualInputs;
use crate::distributions::{align_supports, Binning, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// One observation of the 2x2 design.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRow {
    pub cluster_id: String,
    /// 0 = comparison, 1 = treated.
    pub group: u8,
    /// 0 = pre-treatment, 1 = post-treatment.
    pub period: u8,
    pub outcome: f64,
    pub weight: f64,
}

impl ObservationRow {
    pub fn new(
        cluster_id: impl Into<String>,
        group: u8,
        period: u8,
        outcome: f64,
        weight: f64,
    ) -> Result<Self> {
        if group > 1 {
            return Err(Error::Input(format!("group must be 0 or 1, got {group}")));
        }
        if period > 1 {
            return Err(Error::Input(format!("period must be 0 or 1, got {period}")));
        }
        if !outcome.is_finite() {
            return Err(Error::Input(format!("outcome must be finite, got {outcome}")));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Input(format!(
                "weight must be positive and finite, got {weight}"
            )));
        }
        Ok(Self {
            cluster_id: cluster_id.into(),
            group,
            period,
            outcome: crate::distributions::canonical(outcome),
            weight,
        })
    }
}

/// Where a dataset came from and how (whether) it was binned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub source: String,
    pub binning: Option<Binning>,
}

/// A validated 2x2 panel: every (group, period) cell populated and at least
/// two distinct clusters (cluster resampling needs something to resample).
#[derive(Debug, Clone)]
pub struct PanelDataset {
    rows: Vec<ObservationRow>,
    provenance: Provenance,
}

impl PanelDataset {
    pub fn new(rows: Vec<ObservationRow>, provenance: Provenance) -> Result<Self> {
        let mut cell_counts = [[0usize; 2]; 2];
        let mut clusters = BTreeSet::new();
        for row in &rows {
            cell_counts[row.group as usize][row.period as usize] += 1;
            clusters.insert(row.cluster_id.as_str());
        }
        for d in 0..2 {
            for t in 0..2 {
                if cell_counts[d][t] == 0 {
                    return Err(Error::Validation(format!(
                        "cell (group={d}, period={t}) has no observations"
                    )));
                }
            }
        }
        if clusters.len() < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 distinct clusters, found {}",
                clusters.len()
            )));
        }
        Ok(Self { rows, provenance })
    }

    /// Parses the CSV wire format: header
    /// `cluster_id,group,period,outcome[,weight]`, comma-separated, decimal
    /// point, no thousands separators. Missing weight column defaults every
    /// weight to 1.
    pub fn from_csv<R: Read>(reader: R, source: impl Into<String>) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = csv_reader
            .headers()
            .map_err(|e| Error::Parse {
                row: 0,
                detail: format!("cannot read header: {e}"),
            })?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let required = |name: &str| {
            col(name).ok_or_else(|| Error::Schema {
                column: name.to_string(),
            })
        };
        let cluster_col = required("cluster_id")?;
        let group_col = required("group")?;
        let period_col = required("period")?;
        let outcome_col = required("outcome")?;
        let weight_col = col("weight");

        let mut rows = Vec::new();
        for (i, record) in csv_reader.records().enumerate() {
            let row_no = i + 1;
            let record = record.map_err(|e| Error::Parse {
                row: row_no,
                detail: e.to_string(),
            })?;
            let field = |idx: usize, name: &str| {
                record.get(idx).ok_or_else(|| Error::Parse {
                    row: row_no,
                    detail: format!("missing field `{name}`"),
                })
            };
            let parse_binary = |idx: usize, name: &str| -> Result<u8> {
                match field(idx, name)? {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::Parse {
                        row: row_no,
                        detail: format!("`{name}` must be 0 or 1, got `{other}`"),
                    }),
                }
            };
            let parse_f64 = |idx: usize, name: &str| -> Result<f64> {
                let raw = field(idx, name)?;
                raw.parse::<f64>().map_err(|_| Error::Parse {
                    row: row_no,
                    detail: format!("cannot parse `{name}` value `{raw}` as a number"),
                })
            };

            let cluster_id = field(cluster_col, "cluster_id")?.to_string();
            if cluster_id.is_empty() {
                return Err(Error::Parse {
                    row: row_no,
                    detail: "empty cluster_id".into(),
                });
            }
            let group = parse_binary(group_col, "group")?;
            let period = parse_binary(period_col, "period")?;
            let outcome = parse_f64(outcome_col, "outcome")?;
            let weight = match weight_col {
                Some(idx) => parse_f64(idx, "weight")?,
                None => 1.0,
            };
            rows.push(
                ObservationRow::new(cluster_id, group, period, outcome, weight).map_err(|e| {
                    Error::Parse {
                        row: row_no,
                        detail: e.to_string(),
                    }
                })?,
            );
        }

        Self::new(
            rows,
            Provenance {
                source: source.into(),
                binning: None,
            },
        )
    }

    /// Writes the CSV wire format (always including the weight column).
    /// Floats are written in shortest round-trip form, so parsing the output
    /// reproduces the rows bit for bit.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let io_err = |e: csv::Error| Error::Input(format!("cannot write CSV: {e}"));
        out.write_record(["cluster_id", "group", "period", "outcome", "weight"])
            .map_err(io_err)?;
        for row in &self.rows {
            out.write_record([
                row.cluster_id.as_str(),
                if row.group == 0 { "0" } else { "1" },
                if row.period == 0 { "0" } else { "1" },
                &format_float(row.outcome),
                &format_float(row.weight),
            ])
            .map_err(io_err)?;
        }
        out.flush().map_err(|e| Error::Input(format!("cannot flush CSV: {e}")))?;
        Ok(())
    }

    pub fn rows(&self) -> &[ObservationRow] {
        &self.rows
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Distinct cluster ids in first-appearance order.
    pub fn cluster_ids(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        for row in &self.rows {
            if seen.insert(row.cluster_id.as_str()) {
                order.push(row.cluster_id.as_str());
            }
        }
        order
    }

    /// Weighted mean of raw outcomes per (group, period) cell.
    pub fn cell_means(&self) -> [[f64; 2]; 2] {
        let mut num = [[CompensatedSum::new(); 2]; 2];
        let mut den = [[CompensatedSum::new(); 2]; 2];
        for row in &self.rows {
            let (d, t) = (row.group as usize, row.period as usize);
            num[d][t].add(row.weight * row.outcome);
            den[d][t].add(row.weight);
        }
        let mut means = [[0.0; 2]; 2];
        for d in 0..2 {
            for t in 0..2 {
                means[d][t] = num[d][t].value() / den[d][t].value();
            }
        }
        means
    }
}

/// `{}` on f64 prints the shortest decimal that parses back to the same bits.
fn format_float(x: f64) -> String {
    format!("{x}")
}

/// The four per-cell outcome distributions on a common support, plus the
/// raw-outcome cell means. Means are computed before any binning so that
/// mean-based quantities are not coarsened by the choice of bins; binned
/// distributions feed only the distribution-level diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FourCells {
    dists: [[DiscreteDistribution; 2]; 2],
    means: [[f64; 2]; 2],
}

impl FourCells {
    /// Builds aligned cells from explicit distributions; means are taken
    /// from the distributions themselves.
    pub fn from_distributions(dists: [[DiscreteDistribution; 2]; 2]) -> Result<Self> {
        let [[d00, d01], [d10, d11]] = dists;
        let aligned = align_supports(&[d00, d01, d10, d11])?;
        let [a00, a01, a10, a11]: [DiscreteDistribution; 4] =
            aligned.try_into().expect("four aligned distributions");
        let means = [
            [a00.mean(), a01.mean()],
            [a10.mean(), a11.mean()],
        ];
        Ok(Self {
            dists: [[a00, a01], [a10, a11]],
            means,
        })
    }

    pub(crate) fn from_parts(
        dists: [[DiscreteDistribution; 2]; 2],
        means: [[f64; 2]; 2],
    ) -> Self {
        Self { dists, means }
    }

    /// Distribution of cell (group `d`, period `t`).
    pub fn dist(&self, d: u8, t: u8) -> &DiscreteDistribution {
        &self.dists[d as usize][t as usize]
    }

    /// Raw-outcome mean of cell (group `d`, period `t`).
    pub fn mean(&self, d: u8, t: u8) -> f64 {
        self.means[d as usize][t as usize]
    }

    /// Common support shared by the four cells.
    pub fn support(&self) -> &[f64] {
        self.dists[0][0].support()
    }

    /// The three cells counterfactual construction is allowed to read:
    /// treated-pre, comparison-pre, comparison-post. Treated-post holds
    /// treated outcomes, which must never masquerade as untreated draws, so
    /// it is deliberately absent from this view.
    pub fn counterfactual_inputs(&self) -> CounterfactualInputs<'_> {
        CounterfactualInputs {
            treated_pre: &self.dists[1][0],
            comparison_pre: &self.dists[0][0],
            comparison_post: &self.dists[0][1],
        }
    }
}

/// Per-cell weighted empirical PMFs (optionally binned) aligned to the union
/// support, with raw-outcome cell means.
pub fn cell_distributions(panel: &PanelDataset, binning: Option<&Binning>) -> Result<FourCells> {
    let mut obs: [[Vec<(f64, f64)>; 2]; 2] = Default::default();
    for row in panel.rows() {
        obs[row.group as usize][row.period as usize].push((row.outcome, row.weight));
    }
    let mut built: Vec<DiscreteDistribution> = Vec::with_capacity(4);
    for d in 0..2 {
        for (t, cell) in obs[d].iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::Validation(format!(
                    "cell (group={d}, period={t}) has no observations"
                )));
            }
            let dist = match binning {
                Some(b) => DiscreteDistribution::from_binned_observations(cell, b)?,
                None => DiscreteDistribution::from_observations(cell)?,
            };
            built.push(dist);
        }
    }
    let aligned = align_supports(&built)?;
    let [a00, a01, a10, a11]: [DiscreteDistribution; 4] =
        aligned.try_into().expect("four aligned distributions");
    Ok(FourCells::from_parts(
        [[a00, a01], [a10, a11]],
        panel.cell_means(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_csv() -> &'static str {
        "cluster_id,group,period,outcome,weight\n\
         a,0,0,1.0,1\n\
         a,0,1,2.0,1\n\
         b,1,0,3.0,1\n\
         b,1,1,4.0,1\n"
    }

    #[test]
    fn parses_minimal_panel() {
        let panel = PanelDataset::from_csv(toy_csv().as_bytes(), "toy").unwrap();
        assert_eq!(panel.rows().len(), 4);
        assert_eq!(panel.cluster_ids(), vec!["a", "b"]);
        assert_eq!(panel.rows()[2].group, 1);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let text = "cluster_id,period,outcome\na,0,1.0\n";
        match PanelDataset::from_csv(text.as_bytes(), "t") {
            Err(Error::Schema { column }) => assert_eq!(column, "group"),
            other => panic!("expected SchemaError, got {other:?}"),
        }
    }

    #[test]
    fn absent_weight_defaults_to_one() {
        let text = "cluster_id,group,period,outcome\n\
                    a,0,0,1\na,0,1,1\nb,1,0,1\nb,1,1,1\n";
        let panel = PanelDataset::from_csv(text.as_bytes(), "t").unwrap();
        assert!(panel.rows().iter().all(|r| r.weight == 1.0));
    }

    #[test]
    fn bad_cell_value_reports_row_number() {
        let text = "cluster_id,group,period,outcome\n\
                    a,0,0,1\na,0,1,oops\nb,1,0,1\nb,1,1,1\n";
        match PanelDataset::from_csv(text.as_bytes(), "t") {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn group_must_be_binary() {
        let text = "cluster_id,group,period,outcome\n\
                    a,2,0,1\na,0,1,1\nb,1,0,1\nb,1,1,1\n";
        assert!(matches!(
            PanelDataset::from_csv(text.as_bytes(), "t"),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn empty_cell_is_a_validation_error() {
        let text = "cluster_id,group,period,outcome\n\
                    a,0,0,1\na,0,1,1\nb,1,0,1\n";
        match PanelDataset::from_csv(text.as_bytes(), "t") {
            Err(Error::Validation(msg)) => assert!(msg.contains("group=1, period=1")),
            other => panic!("expected ValidationError, got {other:?}"),
        }
    }

    #[test]
    fn single_cluster_is_rejected() {
        let text = "cluster_id,group,period,outcome\n\
                    a,0,0,1\na,0,1,1\na,1,0,1\na,1,1,1\n";
        assert!(matches!(
            PanelDataset::from_csv(text.as_bytes(), "t"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn csv_round_trip_preserves_rows() {
        let text = "cluster_id,group,period,outcome,weight\n\
                    a,0,0,1.25,1\n\
                    a,0,1,0.1,2.5\n\
                    b,1,0,-3.7500000000000004,1\n\
                    b,1,1,4e-17,0.125\n";
        let panel = PanelDataset::from_csv(text.as_bytes(), "t").unwrap();
        let mut buf = Vec::new();
        panel.write_csv(&mut buf).unwrap();
        let reparsed = PanelDataset::from_csv(buf.as_slice(), "t2").unwrap();
        assert_eq!(panel.rows(), reparsed.rows());
    }

    #[test]
    fn cell_distributions_aligns_and_means_use_raw_outcomes() {
        let text = "cluster_id,group,period,outcome\n\
                    a,0,0,0\na,0,1,1\nb,1,0,0\nb,1,1,1\n";
        let panel = PanelDataset::from_csv(text.as_bytes(), "t").unwrap();
        let cells = cell_distributions(&panel, None).unwrap();
        assert_eq!(cells.support(), &[0.0, 1.0]);
        assert_eq!(cells.dist(0, 0).masses(), &[1.0, 0.0]);
        assert_eq!(cells.dist(0, 1).masses(), &[0.0, 1.0]);
        assert_eq!(cells.mean(1, 1), 1.0);

        // binning coarsens distributions but not means
        let binning = Binning::new(10.0, 0.0).unwrap();
        let binned = cell_distributions(&panel, Some(&binning)).unwrap();
        assert_eq!(binned.support(), &[0.0]);
        assert_eq!(binned.mean(0, 1), 1.0);
    }

    #[test]
    fn degenerate_outcome_panel_gives_point_masses() {
        let text = "cluster_id,group,period,outcome\n\
                    a,0,0,3\na,0,1,3\nb,1,0,3\nb,1,1,3\n";
        let panel = PanelDataset::from_csv(text.as_bytes(), "t").unwrap();
        let cells = cell_distributions(&panel, None).unwrap();
        for d in 0..2u8 {
            for t in 0..2u8 {
                assert_eq!(cells.dist(d, t).masses(), &[1.0]);
                assert_eq!(cells.mean(d, t), 3.0);
            }
        }
    }

    #[test]
    fn cell_weight_totals_match_row_weights() {
        let text = "cluster_id,group,period,outcome,weight\n\
                    a,0,0,1,2\na,0,0,2,3\na,0,1,1,1\nb,1,0,1,1\nb,1,1,1,4\n";
        let panel = PanelDataset::from_csv(text.as_bytes(), "t").unwrap();
        let cells = cell_distributions(&panel, None).unwrap();
        assert_eq!(cells.dist(0, 0).total_weight(), 5.0);
        assert_eq!(cells.dist(1, 1).total_weight(), 4.0);
        // masses reproduce the weighted empirical PMF of the cell's rows
        let c00 = cells.dist(0, 0);
        let idx1 = c00.support().iter().position(|&y| y == 1.0).unwrap();
        let idx2 = c00.support().iter().position(|&y| y == 2.0).unwrap();
        assert!((c00.masses()[idx1] - 0.4).abs() < 1e-15);
        assert!((c00.masses()[idx2] - 0.6).abs() < 1e-15);
    }
}
