//! Column-major tabular data model with missing-cell tracking, CSV I/O,
//! and categorical encoders.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a column holds. Categorical cardinality counts distinct observed
/// categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical(usize),
}

/// One column of cell values. Masked cells keep a placeholder (NaN or "")
/// that no consumer reads.
#[derive(Debug, Clone)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A single cell value, used for ground truth and statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Cat(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Cat(s) => write!(f, "{s}"),
        }
    }
}

/// Column-major table with a per-cell missing mask (`true` = missing).
/// Immutable after construction; mutating operations return new datasets.
#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    data: Vec<ColumnData>,
    mask: Vec<Vec<bool>>,
}

impl Dataset {
    pub fn new(names: Vec<String>, data: Vec<ColumnData>, mask: Vec<Vec<bool>>) -> Result<Self> {
        if names.len() != data.len() || names.len() != mask.len() {
            return Err(Error::Schema(format!(
                "{} names, {} columns, {} mask columns",
                names.len(),
                data.len(),
                mask.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(Error::Schema(format!("duplicate column name '{name}'")));
            }
        }
        let n_rows = data.first().map_or(0, ColumnData::len);
        for (i, (col, m)) in data.iter().zip(&mask).enumerate() {
            if col.len() != n_rows || m.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column '{}' has {} values and {} mask entries, expected {}",
                    names[i],
                    col.len(),
                    m.len(),
                    n_rows
                )));
            }
        }
        Ok(Dataset { names, data, mask })
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, ColumnData::len)
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::Usage(format!("column '{name}' not found")))
    }

    pub fn column(&self, idx: usize) -> &ColumnData {
        &self.data[idx]
    }

    pub fn mask(&self, idx: usize) -> &[bool] {
        &self.mask[idx]
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.mask[col][row]
    }

    pub fn kind(&self, idx: usize) -> ColumnKind {
        match &self.data[idx] {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(values) => {
                let distinct: HashSet<&str> = values
                    .iter()
                    .zip(&self.mask[idx])
                    .filter(|(_, &m)| !m)
                    .map(|(v, _)| v.as_str())
                    .collect();
                ColumnKind::Categorical(distinct.len())
            }
        }
    }

    /// Numeric column values; masked entries hold NaN placeholders.
    pub fn numeric(&self, idx: usize) -> Result<&[f64]> {
        match &self.data[idx] {
            ColumnData::Numeric(v) => Ok(v),
            ColumnData::Categorical(_) => Err(Error::Usage(format!(
                "column '{}' is not numeric",
                self.names[idx]
            ))),
        }
    }

    pub fn categorical(&self, idx: usize) -> Result<&[String]> {
        match &self.data[idx] {
            ColumnData::Categorical(v) => Ok(v),
            ColumnData::Numeric(_) => Err(Error::Usage(format!(
                "column '{}' is not categorical",
                self.names[idx]
            ))),
        }
    }

    pub fn value(&self, row: usize, col: usize) -> Value {
        match &self.data[col] {
            ColumnData::Numeric(v) => Value::Num(v[row]),
            ColumnData::Categorical(v) => Value::Cat(v[row].clone()),
        }
    }

    pub fn missing_count(&self, idx: usize) -> usize {
        self.mask[idx].iter().filter(|&&m| m).count()
    }

    pub fn total_missing(&self) -> usize {
        (0..self.n_cols()).map(|i| self.missing_count(i)).sum()
    }

    /// Observed-value equality: names, kinds, masks, and every unmasked cell.
    pub fn same_observed(&self, other: &Dataset) -> bool {
        if self.names != other.names || self.mask != other.mask {
            return false;
        }
        for col in 0..self.n_cols() {
            if self.kind(col) != other.kind(col) {
                return false;
            }
            for row in 0..self.n_rows() {
                if self.mask[col][row] {
                    continue;
                }
                match (&self.data[col], &other.data[col]) {
                    (ColumnData::Numeric(a), ColumnData::Numeric(b)) => {
                        if a[row] != b[row] {
                            return false;
                        }
                    }
                    (ColumnData::Categorical(a), ColumnData::Categorical(b)) => {
                        if a[row] != b[row] {
                            return false;
                        }
                    }
                    _ => return false,
                }
            }
        }
        true
    }

    /// Copy with one cell masked out; the stored value is replaced by a
    /// placeholder so accidental reads are loud.
    pub(crate) fn with_masked_cell(&self, row: usize, col: usize) -> Dataset {
        let mut out = self.clone();
        out.mask[col][row] = true;
        match &mut out.data[col] {
            ColumnData::Numeric(v) => v[row] = f64::NAN,
            ColumnData::Categorical(v) => v[row].clear(),
        }
        out
    }


    pub(crate) fn fill_cell(&mut self, row: usize, col: usize, value: Value) {
        self.mask[col][row] = false;
        match (&mut self.data[col], value) {
            (ColumnData::Numeric(v), Value::Num(x)) => v[row] = x,
            (ColumnData::Categorical(v), Value::Cat(s)) => v[row] = s,
            _ => panic!("value kind does not match column kind"),
        }
    }
}

/// Bijection between category strings and consecutive integer codes,
/// assigned in lexicographic category order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodingMap {
    pub column: String,
    codes: BTreeMap<String, usize>,
    categories: Vec<String>,
}

impl EncodingMap {
    fn from_observed(column: &str, values: &[String], mask: &[bool]) -> Self {
        let mut categories: Vec<String> = values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| !m)
            .map(|(v, _)| v.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        categories.sort();
        let codes = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        EncodingMap {
            column: column.to_string(),
            codes,
            categories,
        }
    }

    pub fn encode(&self, category: &str) -> Option<usize> {
        self.codes.get(category).copied()
    }

    pub fn decode(&self, code: usize) -> Option<&str> {
        self.categories.get(code).map(String::as_str)
    }

    pub fn cardinality(&self) -> usize {
        self.categories.len()
    }
}

/// Default tokens treated as missing when reading CSV.
pub fn default_missing_tokens() -> HashSet<String> {
    ["", "NA", "NaN", "?"].iter().map(|s| s.to_string()).collect()
}

pub fn read_csv(path: &Path, missing_tokens: &HashSet<String>) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Usage(format!("cannot open '{}': {e}", path.display())))?;
    read_csv_from(file, missing_tokens)
}

pub fn read_csv_from<R: Read>(reader: R, missing_tokens: &HashSet<String>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h) {
            return Err(Error::Schema(format!("duplicate header name '{h}'")));
        }
    }

    let n_cols = headers.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); n_cols];
    let mut mask: Vec<Vec<bool>> = vec![Vec::new(); n_cols];
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: i + 2,
            message: e.to_string(),
        })?;
        if record.len() != n_cols {
            return Err(Error::Parse {
                row: i + 2,
                message: format!("expected {} fields, found {}", n_cols, record.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let missing = missing_tokens.contains(field);
            mask[c].push(missing);
            cells[c].push(if missing { String::new() } else { field.to_string() });
        }
    }

    // A column is Numeric when every observed token parses as a decimal number.
    let mut data = Vec::with_capacity(n_cols);
    for (c, col) in cells.into_iter().enumerate() {
        let numeric = col
            .iter()
            .zip(&mask[c])
            .filter(|(_, &m)| !m)
            .all(|(tok, _)| tok.parse::<f64>().is_ok());
        if numeric {
            let values = col
                .iter()
                .zip(&mask[c])
                .map(|(tok, &m)| if m { f64::NAN } else { tok.parse().unwrap() })
                .collect();
            data.push(ColumnData::Numeric(values));
        } else {
            data.push(ColumnData::Categorical(col));
        }
    }
    Dataset::new(headers, data, mask)
}

pub fn write_csv(d: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(d, file)
}

pub fn write_csv_to<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    // Single-column tables are always quoted: an unquoted empty field would
    // produce a blank line, which CSV readers skip entirely.
    let quote_style = if d.n_cols() == 1 {
        csv::QuoteStyle::Always
    } else {
        csv::QuoteStyle::Necessary
    };
    let mut wtr = csv::WriterBuilder::new()
        .quote_style(quote_style)
        .from_writer(writer);
    wtr.write_record(d.names())
        .map_err(|e| Error::Schema(e.to_string()))?;
    let mut record = Vec::with_capacity(d.n_cols());
    for row in 0..d.n_rows() {
        record.clear();
        for col in 0..d.n_cols() {
            if d.is_missing(row, col) {
                record.push(String::new());
            } else {
                record.push(d.value(row, col).to_string());
            }
        }
        wtr.write_record(&record)
            .map_err(|e| Error::Schema(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Replace a categorical column by its integer codes. Masked cells stay
/// masked; the returned map inverts the encoding.
pub fn label_encode(d: &Dataset, column: &str) -> Result<(Dataset, EncodingMap)> {
    let idx = d.require_column(column)?;
    let values = d.categorical(idx)?;
    let mask = d.mask(idx);
    let map = EncodingMap::from_observed(column, values, mask);
    let codes = values
        .iter()
        .zip(mask)
        .map(|(v, &m)| {
            if m {
                f64::NAN
            } else {
                map.encode(v).expect("observed category is in the map") as f64
            }
        })
        .collect();

    let mut out = d.clone();
    out.data[idx] = ColumnData::Numeric(codes);
    Ok((out, map))
}

/// Invert `label_encode` on a numeric code column.
pub fn label_decode(d: &Dataset, map: &EncodingMap) -> Result<Dataset> {
    let idx = d.require_column(&map.column)?;
    let codes = d.numeric(idx)?;
    let mask = d.mask(idx);
    let values = codes
        .iter()
        .zip(mask)
        .map(|(&code, &m)| {
            if m {
                Ok(String::new())
            } else {
                let code = code.round();
                map.decode(code as usize)
                    .map(str::to_string)
                    .ok_or_else(|| Error::Usage(format!("code {code} not in encoding map")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = d.clone();
    out.data[idx] = ColumnData::Categorical(values);
    Ok(out)
}

/// Expand a categorical column into one indicator column per category,
/// named `<col>=<category>`. A masked source cell masks all indicators.
pub fn one_hot_encode(d: &Dataset, column: &str) -> Result<Dataset> {
    let idx = d.require_column(column)?;
    let values = d.categorical(idx)?;
    let mask = d.mask(idx).to_vec();
    let map = EncodingMap::from_observed(column, values, &mask);
    if map.cardinality() < 2 {
        return Err(Error::Usage(format!(
            "column '{column}' has cardinality {} < 2, nothing to expand",
            map.cardinality()
        )));
    }

    let mut indicator_cols: Vec<Vec<f64>> = vec![Vec::with_capacity(values.len()); map.cardinality()];
    for (v, &m) in values.iter().zip(&mask) {
        let code = if m { None } else { map.encode(v) };
        for (c, col) in indicator_cols.iter_mut().enumerate() {
            col.push(match code {
                Some(k) if k == c => 1.0,
                Some(_) => 0.0,
                None => f64::NAN,
            });
        }
    }

    let mut names = Vec::new();
    let mut data = Vec::new();
    let mut out_mask = Vec::new();
    for col in 0..d.n_cols() {
        if col == idx {
            for (c, ind) in indicator_cols.iter().enumerate() {
                names.push(format!("{column}={}", map.decode(c).unwrap()));
                data.push(ColumnData::Numeric(ind.clone()));
                out_mask.push(mask.clone());
            }
        } else {
            names.push(d.names[col].clone());
            data.push(d.data[col].clone());
            out_mask.push(d.mask[col].clone());
        }
    }
    Dataset::new(names, data, out_mask)
}

/// Per-column summary over observed cells. Undefined statistics are `None`.
#[derive(Debug, Clone)]
pub struct ColumnStats {
    pub mean: Option<f64>,
    /// Population standard deviation (denominator n).
    pub std: Option<f64>,
    pub mode: Option<Value>,
    pub missing: usize,
}

pub fn column_stats(d: &Dataset, column: &str) -> Result<ColumnStats> {
    let idx = d.require_column(column)?;
    let mask = d.mask(idx);
    let missing = d.missing_count(idx);
    match d.column(idx) {
        ColumnData::Numeric(values) => {
            let observed: Vec<f64> = values
                .iter()
                .zip(mask)
                .filter(|(_, &m)| !m)
                .map(|(&v, _)| v)
                .collect();
            if observed.is_empty() {
                return Ok(ColumnStats {
                    mean: None,
                    std: None,
                    mode: None,
                    missing,
                });
            }
            let n = observed.len() as f64;
            let mean = observed.iter().sum::<f64>() / n;
            let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            // Mode: most frequent observed value, ties to the smallest.
            let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            let mut sorted = observed.clone();
            sorted.sort_by(f64::total_cmp);
            for v in sorted {
                let e = counts.entry(v.to_bits()).or_insert((v, 0));
                e.1 += 1;
            }
            let mode = counts
                .values()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.total_cmp(&a.0)))
                .map(|&(v, _)| Value::Num(v));
            Ok(ColumnStats {
                mean: Some(mean),
                std: Some(var.sqrt()),
                mode,
                missing,
            })
        }
        ColumnData::Categorical(values) => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for (v, &m) in values.iter().zip(mask) {
                if !m {
                    *counts.entry(v).or_default() += 1;
                }
            }
            // Ties go to the lexicographically smallest category.
            let mode = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(v, _)| Value::Cat(v.to_string()));
            Ok(ColumnStats {
                mean: None,
                std: None,
                mode,
                missing,
            })
        }
    }
}
