//! Controlled missingness injection with exact counts and recorded ground
//! truth for later scoring.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Mcar,
    Mar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MissingnessSpec {
    /// Fraction of rows that receive one masked cell.
    pub rate: f64,
    pub mechanism: Mechanism,
    #[serde(default)]
    pub excluded_columns: BTreeSet<String>,
    #[serde(default)]
    pub seed: u64,
    /// Column whose observed values drive row selection under MAR.
    #[serde(default)]
    pub mar_driver: Option<String>,
}

impl Default for MissingnessSpec {
    fn default() -> Self {
        MissingnessSpec {
            rate: 0.10,
            mechanism: Mechanism::Mcar,
            excluded_columns: BTreeSet::new(),
            seed: 0,
            mar_driver: None,
        }
    }
}

/// Cells removed by the injector, with their original values.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthCells {
    pub cells: Vec<GroundTruthCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthCell {
    pub row: usize,
    pub column: String,
    pub value: Value,
}

impl GroundTruthCells {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Restore every recorded cell, reproducing the pre-injection dataset.
    pub fn restore(&self, d: &Dataset) -> Result<Dataset> {
        let mut out = d.clone();
        for cell in &self.cells {
            let col = out.require_column(&cell.column)?;
            out.fill_cell(cell.row, col, cell.value.clone());
        }
        Ok(out)
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["row", "column", "value"])
            .map_err(|e| Error::Schema(e.to_string()))?;
        for cell in &self.cells {
            wtr.write_record([cell.row.to_string(), cell.column.clone(), cell.value.to_string()])
                .map_err(|e| Error::Schema(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Mask exactly round(rate * n_rows) cells, one per selected row, in a
/// uniformly chosen eligible column (MCAR) or with row weight proportional
/// to the driver column's rank (MAR). Deterministic for a given spec.
pub fn inject_missing(d: &Dataset, spec: &MissingnessSpec) -> Result<(Dataset, GroundTruthCells)> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::Usage(format!("rate {} out of [0,1]", spec.rate)));
    }
    if d.total_missing() > 0 {
        return Err(Error::Usage("inject_missing requires a fully observed dataset".into()));
    }
    for name in &spec.excluded_columns {
        d.require_column(name)?;
    }
    let driver_idx = match (spec.mechanism, &spec.mar_driver) {
        (Mechanism::Mar, Some(name)) => Some(d.require_column(name)?),
        (Mechanism::Mar, None) => {
            return Err(Error::Usage("MAR mechanism requires --mar-driver".into()))
        }
        (Mechanism::Mcar, _) => None,
    };

    let eligible: Vec<usize> = (0..d.n_cols())
        .filter(|&c| !spec.excluded_columns.contains(&d.names()[c]) && Some(c) != driver_idx)
        .collect();
    let n_cells = round_half_up(spec.rate * d.n_rows() as f64);
    if eligible.is_empty() && n_cells > 0 {
        return Err(Error::Usage("no eligible columns to inject into".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = match driver_idx {
        None => {
            let mut all: Vec<usize> = (0..d.n_rows()).collect();
            all.shuffle(&mut rng);
            all.truncate(n_cells);
            all
        }
        Some(driver) => weighted_rows_by_rank(d, driver, n_cells, &mut rng)?,
    };

    let mut out = d.clone();
    let mut cells = Vec::with_capacity(n_cells);
    for row in rows {
        let col = eligible[rng.gen_range(0..eligible.len())];
        cells.push(GroundTruthCell {
            row,
            column: d.names()[col].clone(),
            value: d.value(row, col),
        });
        out = out.with_masked_cell(row, col);
    }
    Ok((out, GroundTruthCells { cells }))
}

/// Sample `n_cells` distinct rows without replacement, weight proportional
/// to the 1-based rank of the driver value (ties broken by row index).
fn weighted_rows_by_rank(
    d: &Dataset,
    driver: usize,
    n_cells: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let values = d.numeric(driver).map_err(|_| {
        Error::Usage(format!("MAR driver column '{}' must be numeric", d.names()[driver]))
    })?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut weight = vec![0.0f64; values.len()];
    for (rank, &row) in order.iter().enumerate() {
        weight[row] = (rank + 1) as f64;
    }

    let mut remaining: Vec<usize> = (0..values.len()).collect();
    let mut chosen = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let total: f64 = remaining.iter().map(|&r| weight[r]).sum();
        let mut draw = rng.gen_range(0.0..total);
        let mut pick = remaining.len() - 1;
        for (i, &r) in remaining.iter().enumerate() {
            draw -= weight[r];
            if draw < 0.0 {
                pick = i;
                break;
            }
        }
        chosen.push(remaining.swap_remove(pick));
    }
    Ok(chosen)
}

#[derive(Debug, Clone, Serialize)]
pub struct MissingReport {
    pub per_column: Vec<(String, usize)>,
    pub total: usize,
}

pub fn missing_report(d: &Dataset) -> MissingReport {
    let per_column: Vec<(String, usize)> = (0..d.n_cols())
        .map(|c| (d.names()[c].clone(), d.missing_count(c)))
        .collect();
    let total = per_column.iter().map(|(_, n)| n).sum();
    MissingReport { per_column, total }
}
