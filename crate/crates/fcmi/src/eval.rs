//! Metrics and the inject -> impute -> score experiment pipeline.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{iterative_impute, knn_impute, mean_mode_impute, IterativeConfig, KnnConfig};
use crate::dataset::{read_csv, default_missing_tokens, Dataset, Value};
use crate::error::{Error, Result};
use crate::fcmi::{fcmi_impute_mixed, FcmiConfig};
use crate::missingness::{inject_missing, GroundTruthCells, Mechanism, MissingnessSpec};

/// Root mean squared error between true and imputed numeric values.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Usage(format!(
            "rmse needs equal nonzero lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mse = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p).powi(2))
        .sum::<f64>()
        / y_true.len() as f64;
    Ok(mse.sqrt())
}

/// Fraction of positions where the labels match exactly.
pub fn accuracy(y_true: &[String], y_pred: &[String]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Usage(format!(
            "accuracy needs equal nonzero lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Mean,
    Knn {
        #[serde(default = "default_knn_k")]
        k: usize,
    },
    MiceLite {
        #[serde(default = "default_sweeps")]
        sweeps: usize,
        #[serde(default = "default_iter_tol")]
        tol: f64,
    },
    Fcmi {
        #[serde(flatten)]
        config: FcmiConfig,
    },
}

fn default_knn_k() -> usize {
    KnnConfig::default().k
}
fn default_sweeps() -> usize {
    IterativeConfig::default().sweeps
}
fn default_iter_tol() -> f64 {
    IterativeConfig::default().tol
}

impl AlgorithmSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmSpec::Mean => "mean",
            AlgorithmSpec::Knn { .. } => "knn",
            AlgorithmSpec::MiceLite { .. } => "mice-lite",
            AlgorithmSpec::Fcmi { .. } => "fcmi",
        }
    }

    pub fn from_cli_name(name: &str, fcmi: FcmiConfig, knn_k: usize) -> Result<AlgorithmSpec> {
        match name {
            "mean" => Ok(AlgorithmSpec::Mean),
            "knn" => Ok(AlgorithmSpec::Knn { k: knn_k }),
            "mice-lite" => Ok(AlgorithmSpec::MiceLite {
                sweeps: default_sweeps(),
                tol: default_iter_tol(),
            }),
            "fcmi" => Ok(AlgorithmSpec::Fcmi { config: fcmi }),
            other => Err(Error::Usage(format!(
                "unknown algorithm '{other}' (expected fcmi|knn|mean|mice-lite)"
            ))),
        }
    }
}

/// One full experiment: a dataset, an injection recipe, algorithms to
/// compare, and the seeds to sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_mechanism")]
    pub mechanism: Mechanism,
    #[serde(default)]
    pub excluded_columns: Vec<String>,
    #[serde(default)]
    pub mar_driver: Option<String>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub seeds: Vec<u64>,
}

fn default_rate() -> f64 {
    0.10
}
fn default_mechanism() -> Mechanism {
    Mechanism::Mcar
}

#[derive(Debug, Clone, Serialize)]
pub struct RunScore {
    pub algorithm: String,
    pub seed: u64,
    pub rmse: Option<f64>,
    pub accuracy: Option<f64>,
    pub numeric_cells: usize,
    pub categorical_cells: usize,
    pub fallback_cells: usize,
    /// 100 * (1 - rmse / rmse_of_mean_baseline), clipped to [0, 100].
    pub normalized_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateScore {
    pub algorithm: String,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub runs: Vec<RunScore>,
    pub aggregates: Vec<AggregateScore>,
}

fn run_algorithm(algo: &AlgorithmSpec, injected: &Dataset) -> Result<(Dataset, usize)> {
    match algo {
        AlgorithmSpec::Mean => Ok((mean_mode_impute(injected)?, 0)),
        AlgorithmSpec::Knn { k } => {
            let out = knn_impute(injected, &KnnConfig { k: *k })?;
            Ok((out.dataset, out.fallback_cells))
        }
        AlgorithmSpec::MiceLite { sweeps, tol } => Ok((
            iterative_impute(injected, &IterativeConfig { sweeps: *sweeps, tol: *tol })?,
            0,
        )),
        AlgorithmSpec::Fcmi { config } => {
            let (out, reports) = fcmi_impute_mixed(injected, config)?;
            let fallbacks = reports.values().filter(|r| r.fallback.is_some()).count();
            Ok((out, fallbacks))
        }
    }
}

/// Score one imputed dataset against the injected ground truth: numeric
/// cells via rmse, categorical via accuracy.
fn score(
    original: &Dataset,
    imputed: &Dataset,
    truth: &GroundTruthCells,
) -> Result<(Option<f64>, Option<f64>, usize, usize)> {
    let mut num_true = Vec::new();
    let mut num_pred = Vec::new();
    let mut cat_true = Vec::new();
    let mut cat_pred = Vec::new();
    for cell in &truth.cells {
        let col = original.require_column(&cell.column)?;
        match (&cell.value, imputed.value(cell.row, col)) {
            (Value::Num(t), Value::Num(p)) => {
                num_true.push(*t);
                num_pred.push(p);
            }
            (Value::Cat(t), Value::Cat(p)) => {
                cat_true.push(t.clone());
                cat_pred.push(p);
            }
            _ => return Err(Error::Schema(format!("cell kind changed in column '{}'", cell.column))),
        }
    }
    let rmse_val = if num_true.is_empty() { None } else { Some(rmse(&num_true, &num_pred)?) };
    let acc_val = if cat_true.is_empty() { None } else { Some(accuracy(&cat_true, &cat_pred)?) };
    Ok((rmse_val, acc_val, num_true.len(), cat_true.len()))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let d = read_csv(&spec.dataset, &default_missing_tokens())?;
    run_experiment_on(&d, spec)
}

pub fn run_experiment_on(d: &Dataset, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.algorithms.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Usage("algorithm and seed lists must be nonempty".into()));
    }
    if d.total_missing() > 0 {
        return Err(Error::Usage("experiment dataset must be fully observed".into()));
    }

    let mut runs = Vec::new();
    for &seed in &spec.seeds {
        let mspec = MissingnessSpec {
            rate: spec.rate,
            mechanism: spec.mechanism,
            excluded_columns: spec.excluded_columns.iter().cloned().collect(),
            seed,
            mar_driver: spec.mar_driver.clone(),
        };
        let (injected, truth) = inject_missing(d, &mspec)?;

        // The mean baseline doubles as the reference for normalized scores.
        let baseline_rmse = if truth.is_empty() {
            None
        } else {
            let reference = mean_mode_impute(&injected)?;
            score(d, &reference, &truth)?.0
        };

        for algo in &spec.algorithms {
            let (imputed, fallback_cells) = run_algorithm(algo, &injected)?;
            let (rmse_val, acc_val, n_num, n_cat) = if truth.is_empty() {
                (None, None, 0, 0)
            } else {
                score(d, &imputed, &truth)?
            };
            let normalized_score = match (rmse_val, baseline_rmse) {
                (Some(r), Some(b)) if b > 0.0 => Some((100.0 * (1.0 - r / b)).clamp(0.0, 100.0)),
                _ => None,
            };
            runs.push(RunScore {
                algorithm: algo.label().to_string(),
                seed,
                rmse: rmse_val,
                accuracy: acc_val,
                numeric_cells: n_num,
                categorical_cells: n_cat,
                fallback_cells,
                normalized_score,
            });
        }
    }

    let mut aggregates = Vec::new();
    for algo in &spec.algorithms {
        let label = algo.label();
        let rmses: Vec<f64> = runs
            .iter()
            .filter(|r| r.algorithm == label)
            .filter_map(|r| r.rmse)
            .collect();
        let accs: Vec<f64> = runs
            .iter()
            .filter(|r| r.algorithm == label)
            .filter_map(|r| r.accuracy)
            .collect();
        let (rmse_mean, rmse_std) = mean_sample_std(&rmses);
        let (accuracy_mean, accuracy_std) = mean_sample_std(&accs);
        aggregates.push(AggregateScore {
            algorithm: label.to_string(),
            rmse_mean,
            rmse_std,
            accuracy_mean,
            accuracy_std,
        });
    }
    Ok(ExperimentResult { runs, aggregates })
}

/// Arithmetic mean and sample standard deviation (n-1) across seeds.
fn mean_sample_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        None
    } else {
        Some((values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    };
    (Some(mean), std)
}

impl ExperimentResult {
    /// Flat CSV: algorithm, seed, metric, value, normalized_score.
    pub fn write_flat_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "algorithm,seed,metric,value,normalized_score")?;
        for run in &self.runs {
            if let Some(r) = run.rmse {
                let norm = run
                    .normalized_score
                    .map(|s| format!("{s:.4}"))
                    .unwrap_or_default();
                writeln!(writer, "{},{},rmse,{r:.6},{norm}", run.algorithm, run.seed)?;
            }
            if let Some(a) = run.accuracy {
                writeln!(writer, "{},{},accuracy,{a:.6},", run.algorithm, run.seed)?;
            }
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self).map_err(|e| Error::Schema(e.to_string()))?;
        Ok(())
    }
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config '{}': {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Usage(format!("bad config: {e}")))
}
