//! Correlation-guided imputation: per-column regression models trained with
//! a composite loss (data fit plus a KL penalty on the correlation
//! distribution), used to predict masked cells.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::correlation::{
    correlation_vector, kl_divergence, select_predictors, to_distribution, pearson_dense,
    CorrelationDistribution, DIST_EPSILON,
};
use crate::dataset::{column_stats, ColumnData, Dataset, Value};
use crate::error::{Error, Result};
use crate::regression::{mean_std, ols_fit, softmax};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FcmiConfig {
    /// Number of predictor columns per target.
    pub k: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop when the total loss improves by less than this.
    pub tol: f64,
    /// Weight of the KL term; 0 reduces training to plain least squares.
    pub kl_weight: f64,
    pub seed: u64,
}

impl Default for FcmiConfig {
    fn default() -> Self {
        FcmiConfig {
            k: 3,
            learning_rate: 0.01,
            max_iters: 1000,
            tol: 1e-8,
            kl_weight: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Softmax(usize),
}

/// Loss components for one batch: `total = e + kl_weight * kl`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossBreakdown {
    pub e: f64,
    pub kl: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingReport {
    pub iterations: usize,
    pub trajectory: Vec<LossBreakdown>,
    pub converged: bool,
    pub final_grad_norm: f64,
    /// Set when the column fell back to mean/mode imputation.
    pub fallback: Option<String>,
}

impl TrainingReport {
    fn fallback(reason: &str) -> Self {
        TrainingReport {
            iterations: 0,
            trajectory: Vec::new(),
            converged: false,
            final_grad_norm: f64::NAN,
            fallback: Some(reason.to_string()),
        }
    }
}

/// Per-column model in standardized feature space.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    pub kind: ModelKind,
    /// classes x K for softmax, 1 x K for linear.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub feat_means: Vec<f64>,
    pub feat_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl RegressionModel {
    /// Linear weights and intercept expressed on the raw (de-standardized)
    /// scale.
    pub fn raw_linear(&self) -> (Vec<f64>, f64) {
        let w = &self.weights[0];
        let raw_w: Vec<f64> = w
            .iter()
            .zip(&self.feat_stds)
            .map(|(wi, si)| self.target_std * wi / si)
            .collect();
        let shift: f64 = w
            .iter()
            .zip(self.feat_means.iter().zip(&self.feat_stds))
            .map(|(wi, (mi, si))| wi * mi / si)
            .sum();
        let raw_b = self.target_mean + self.target_std * (self.bias[0] - shift);
        (raw_w, raw_b)
    }
}

/// Model predictions handed to the loss: raw values for numeric targets,
/// per-row class probabilities for categorical ones.
pub enum Predictions<'a> {
    Numeric(&'a [f64]),
    Probabilities(&'a [Vec<f64>]),
}

const PROB_CLAMP: f64 = 1e-9;

/// Composite loss on one batch. The data term is mean squared error
/// (numeric) or mean cross-entropy (categorical); the KL term compares the
/// pre-imputation correlation distribution `p_dist` against the one induced
/// by correlating the predictions with each predictor column.
pub fn fcmi_loss(
    y_true: &[f64],
    y_pred: &Predictions,
    predictors: &[Vec<f64>],
    p_dist: &CorrelationDistribution,
    kl_weight: f64,
) -> Result<LossBreakdown> {
    let n = y_true.len();
    if n < 2 {
        return Err(Error::DegenerateBatch(n));
    }
    if p_dist.len() != predictors.len() {
        return Err(Error::Usage(format!(
            "P has {} entries for {} predictors",
            p_dist.len(),
            predictors.len()
        )));
    }
    for col in predictors {
        if col.len() != n {
            return Err(Error::Usage("predictor batch length mismatch".into()));
        }
    }

    let (e, corr_values) = match y_pred {
        Predictions::Numeric(pred) => {
            if pred.len() != n {
                return Err(Error::Usage("prediction batch length mismatch".into()));
            }
            let mse = y_true
                .iter()
                .zip(*pred)
                .map(|(t, p)| (t - p).powi(2))
                .sum::<f64>()
                / n as f64;
            (mse, pred.to_vec())
        }
        Predictions::Probabilities(probs) => {
            if probs.len() != n {
                return Err(Error::Usage("prediction batch length mismatch".into()));
            }
            let mut ce = 0.0;
            let mut expected = Vec::with_capacity(n);
            for (row, t) in probs.iter().zip(y_true) {
                let label = t.round() as usize;
                let p = row
                    .get(label)
                    .copied()
                    .ok_or_else(|| Error::Usage(format!("label {label} out of range")))?;
                ce -= p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln();
                // Differentiable surrogate for the predicted class: the
                // expected label-encoded value.
                expected.push(row.iter().enumerate().map(|(c, &pc)| pc * c as f64).sum());
            }
            (ce / n as f64, expected)
        }
    };

    let kl = kl_of_predictions(&corr_values, predictors, p_dist)?;
    Ok(LossBreakdown {
        e,
        kl,
        total: e + kl_weight * kl,
    })
}

fn kl_of_predictions(
    values: &[f64],
    predictors: &[Vec<f64>],
    p_dist: &CorrelationDistribution,
) -> Result<f64> {
    let q_r: Vec<f64> = predictors
        .iter()
        .map(|col| pearson_dense(values, col).map(|r| r.unwrap_or(0.0)))
        .collect::<Result<_>>()?;
    kl_divergence(p_dist, &to_distribution(&q_r)?)
}

/// Loss and analytic gradient at a parameter point, for gradient checking
/// and the training loop. Parameters are packed as [w_0..w_{K-1}, bias] per
/// class (a single class for linear models); features and target are used
/// as given.
pub fn loss_with_gradient(
    x: &[Vec<f64>],
    y: &[f64],
    p_dist: &CorrelationDistribution,
    kind: ModelKind,
    kl_weight: f64,
    params: &[f64],
) -> Result<(LossBreakdown, Vec<f64>)> {
    if y.len() < 2 {
        return Err(Error::DegenerateBatch(y.len()));
    }
    let problem = Problem { x, y, p_dist, kind, kl_weight };
    if params.len() != problem.param_len() {
        return Err(Error::Usage(format!(
            "expected {} parameters, got {}",
            problem.param_len(),
            params.len()
        )));
    }
    let (loss, grad) = problem.value_grad(params, true);
    Ok((loss, grad))
}

// --- training internals -------------------------------------------------

/// Training problem in standardized space. Parameters are packed as
/// [w_0..w_{K-1}, b] per class (one class for linear models).
struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    p_dist: &'a CorrelationDistribution,
    kind: ModelKind,
    kl_weight: f64,
}

impl Problem<'_> {
    fn k(&self) -> usize {
        self.x.len()
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    fn param_len(&self) -> usize {
        match self.kind {
            ModelKind::Linear => self.k() + 1,
            ModelKind::Softmax(c) => c * (self.k() + 1),
        }
    }

    fn logits(&self, params: &[f64], row: usize, class: usize) -> f64 {
        let base = class * (self.k() + 1);
        params[base + self.k()]
            + (0..self.k())
                .map(|j| params[base + j] * self.x[j][row])
                .sum::<f64>()
    }

    fn value(&self, params: &[f64]) -> LossBreakdown {
        self.value_grad(params, false).0
    }

    /// Loss and (optionally) its analytic gradient with respect to the
    /// packed parameters.
    fn value_grad(&self, params: &[f64], want_grad: bool) -> (LossBreakdown, Vec<f64>) {
        let n = self.n();
        let k = self.k();
        let nf = n as f64;

        // Forward pass: predictions / probabilities and the correlation
        // surrogate v.
        let mut v = vec![0.0f64; n];
        let mut probs: Vec<Vec<f64>> = Vec::new();
        let e = match self.kind {
            ModelKind::Linear => {
                let mut sum = 0.0;
                for row in 0..n {
                    let pred = self.logits(params, row, 0);
                    v[row] = pred;
                    sum += (pred - self.y[row]).powi(2);
                }
                sum / nf
            }
            ModelKind::Softmax(classes) => {
                let mut ce = 0.0;
                probs.reserve(n);
                for row in 0..n {
                    let logits: Vec<f64> =
                        (0..classes).map(|c| self.logits(params, row, c)).collect();
                    let p = softmax(&logits);
                    let label = self.y[row].round() as usize;
                    ce -= p[label].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP).ln();
                    v[row] = p.iter().enumerate().map(|(c, &pc)| pc * c as f64).sum();
                    probs.push(p);
                }
                ce / nf
            }
        };

        // Correlation distribution of the predictions.
        let v_mean = v.iter().sum::<f64>() / nf;
        let a: Vec<f64> = v.iter().map(|&x| x - v_mean).collect();
        let b_sum: f64 = a.iter().map(|x| x * x).sum();
        let mut q_r = vec![0.0f64; k];
        let mut defined = vec![false; k];
        let mut z_centered: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut z_sq = vec![0.0f64; k];
        let mut cross = vec![0.0f64; k];
        for j in 0..k {
            let z_mean = self.x[j].iter().sum::<f64>() / nf;
            let d: Vec<f64> = self.x[j].iter().map(|&x| x - z_mean).collect();
            z_sq[j] = d.iter().map(|x| x * x).sum();
            cross[j] = a.iter().zip(&d).map(|(ai, di)| ai * di).sum();
            if b_sum > 0.0 && z_sq[j] > 0.0 {
                q_r[j] = (cross[j] / (b_sum.sqrt() * z_sq[j].sqrt())).clamp(-1.0, 1.0);
                defined[j] = true;
            }
            z_centered.push(d);
        }

        let u: Vec<f64> = q_r.iter().map(|r| r.abs() + DIST_EPSILON).collect();
        let s_u: f64 = u.iter().sum();
        let q: Vec<f64> = u.iter().map(|&ui| ui / s_u).collect();
        let clamped: Vec<f64> = q.iter().map(|&qi| qi.clamp(1e-6, 1.0)).collect();
        let s_c: f64 = clamped.iter().sum();
        let p = self.p_dist.probs();
        let kl = p
            .iter()
            .zip(&clamped)
            .map(|(&pi, &ci)| pi * (pi / (ci / s_c)).ln())
            .sum::<f64>()
            .max(0.0);

        let loss = LossBreakdown {
            e,
            kl,
            total: e + self.kl_weight * kl,
        };
        if !want_grad {
            return (loss, Vec::new());
        }

        // Backward pass. dKL/dq_prime_m -> dKL/dq -> dKL/du -> dKL/dr.
        let mut dkl_dq = vec![0.0f64; k];
        for m in 0..k {
            let q_prime = clamped[m] / s_c;
            let not_clamped = q[m] > 1e-6 && q[m] < 1.0;
            if not_clamped {
                dkl_dq[m] = (1.0 - p[m] / q_prime) / s_c;
            }
        }
        let dot_qu: f64 = dkl_dq.iter().zip(&u).map(|(g, ui)| g * ui).sum();
        let mut dkl_dr = vec![0.0f64; k];
        for j in 0..k {
            let dkl_du = (dkl_dq[j] * s_u - dot_qu) / (s_u * s_u);
            dkl_dr[j] = dkl_du * q_r[j].signum();
        }

        // dKL/dv through each defined pearson coefficient.
        let mut dkl_dv = vec![0.0f64; n];
        for j in 0..k {
            if !defined[j] || dkl_dr[j] == 0.0 {
                continue;
            }
            let denom = (b_sum * z_sq[j]).sqrt();
            let ratio = cross[j] / b_sum;
            for row in 0..n {
                dkl_dv[row] += dkl_dr[j] * (z_centered[j][row] - ratio * a[row]) / denom;
            }
        }

        let mut grad = vec![0.0f64; self.param_len()];
        match self.kind {
            ModelKind::Linear => {
                for row in 0..n {
                    let g = 2.0 * (v[row] - self.y[row]) / nf + self.kl_weight * dkl_dv[row];
                    for j in 0..k {
                        grad[j] += g * self.x[j][row];
                    }
                    grad[k] += g;
                }
            }
            ModelKind::Softmax(classes) => {
                for row in 0..n {
                    let label = self.y[row].round() as usize;
                    for c in 0..classes {
                        let pc = probs[row][c];
                        let de_ds = (pc - if c == label { 1.0 } else { 0.0 }) / nf;
                        let dv_ds = pc * (c as f64 - v[row]);
                        let g = de_ds + self.kl_weight * dkl_dv[row] * dv_ds;
                        let base = c * (k + 1);
                        for j in 0..k {
                            grad[base + j] += g * self.x[j][row];
                        }
                        grad[base + k] += g;
                    }
                }
            }
        }
        (loss, grad)
    }
}

fn min_training_rows(k: usize) -> usize {
    (k + 2).max(10)
}

/// Fit one per-column model by full-batch gradient descent on the composite
/// loss. Features are z-scored internally; linear targets too. Linear
/// models start from the least-squares solution, softmax from zeros.
/// Step-halving on the fixed learning rate makes the trajectory
/// non-increasing by construction.
pub fn train_regressor(
    y: &[f64],
    predictors: &[Vec<f64>],
    p_dist: &CorrelationDistribution,
    kind: ModelKind,
    cfg: &FcmiConfig,
    target_name: &str,
) -> Result<(RegressionModel, TrainingReport)> {
    let n = y.len();
    let k = predictors.len();
    if n < min_training_rows(k) {
        return Err(Error::InsufficientData(target_name.to_string(), n));
    }

    let mut feat_means = Vec::with_capacity(k);
    let mut feat_stds = Vec::with_capacity(k);
    let mut x_std: Vec<Vec<f64>> = Vec::with_capacity(k);
    for col in predictors {
        let (m, s) = mean_std(col);
        let s = if s > 0.0 { s } else { 1.0 };
        x_std.push(col.iter().map(|v| (v - m) / s).collect());
        feat_means.push(m);
        feat_stds.push(s);
    }
    let (target_mean, target_std, y_std): (f64, f64, Vec<f64>) = match kind {
        ModelKind::Linear => {
            let (m, s) = mean_std(y);
            let s = if s > 0.0 { s } else { 1.0 };
            (m, s, y.iter().map(|v| (v - m) / s).collect())
        }
        ModelKind::Softmax(_) => (0.0, 1.0, y.to_vec()),
    };

    let problem = Problem {
        x: &x_std,
        y: &y_std,
        p_dist,
        kind,
        kl_weight: cfg.kl_weight,
    };
    let mut params = vec![0.0f64; problem.param_len()];
    if kind == ModelKind::Linear {
        let fit = ols_fit(&x_std, &y_std)?;
        params[..k].copy_from_slice(&fit.weights);
        params[k] = fit.intercept;
    }

    let (mut loss, mut grad) = problem.value_grad(&params, true);
    let mut trajectory = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        let mut step = cfg.learning_rate;
        let mut candidate = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - step * g)
                .collect();
            let trial_loss = problem.value(&trial);
            if trial_loss.total <= loss.total {
                candidate = Some((trial, trial_loss));
                break;
            }
            step *= 0.5;
        }
        let Some((next, next_loss)) = candidate else {
            // No step length descends: at a (local) optimum.
            converged = true;
            break;
        };
        let improvement = loss.total - next_loss.total;
        params = next;
        let refreshed = problem.value_grad(&params, true);
        loss = refreshed.0;
        grad = refreshed.1;
        trajectory.push(loss);
        iterations += 1;
        if improvement < cfg.tol {
            converged = true;
            break;
        }
    }

    let final_grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let weights = match kind {
        ModelKind::Linear => vec![params[..k].to_vec()],
        ModelKind::Softmax(classes) => (0..classes)
            .map(|c| params[c * (k + 1)..c * (k + 1) + k].to_vec())
            .collect(),
    };
    let bias = match kind {
        ModelKind::Linear => vec![params[k]],
        ModelKind::Softmax(classes) => (0..classes).map(|c| params[c * (k + 1) + k]).collect(),
    };
    Ok((
        RegressionModel {
            kind,
            weights,
            bias,
            feat_means,
            feat_stds,
            target_mean,
            target_std,
        },
        TrainingReport {
            iterations,
            trajectory,
            converged,
            final_grad_norm,
            fallback: None,
        },
    ))
}

/// Predict target values for rows given their predictor columns (raw
/// scale). Linear models return de-standardized reals; softmax models the
/// argmax class code.
pub fn predict_missing(model: &RegressionModel, predictor_rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    if predictor_rows.len() != model.feat_means.len() {
        return Err(Error::Usage(format!(
            "model expects {} predictors, got {}",
            model.feat_means.len(),
            predictor_rows.len()
        )));
    }
    let n = predictor_rows.first().map_or(0, Vec::len);
    let standardized: Vec<Vec<f64>> = predictor_rows
        .iter()
        .enumerate()
        .map(|(j, col)| {
            col.iter()
                .map(|v| (v - model.feat_means[j]) / model.feat_stds[j])
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for row in 0..n {
        match model.kind {
            ModelKind::Linear => {
                let pred: f64 = model.bias[0]
                    + model.weights[0]
                        .iter()
                        .zip(&standardized)
                        .map(|(w, col)| w * col[row])
                        .sum::<f64>();
                out.push(model.target_mean + model.target_std * pred);
            }
            ModelKind::Softmax(classes) => {
                let logits: Vec<f64> = (0..classes)
                    .map(|c| {
                        model.bias[c]
                            + model.weights[c]
                                .iter()
                                .zip(&standardized)
                                .map(|(w, col)| w * col[row])
                                .sum::<f64>()
                    })
                    .collect();
                let best = logits
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(c, _)| c)
                    .unwrap_or(0);
                out.push(best as f64);
            }
        }
    }
    Ok(out)
}

/// Impute every masked cell of a numeric-encoded dataset. Columns listed in
/// `categorical` (name -> class count) are modeled with softmax; all others
/// with linear regression. Columns are processed in ascending order of
/// missing count; previously imputed columns serve as full predictors for
/// later ones, and predictor cells still missing are temporarily
/// mean-filled.
pub fn fcmi_impute(
    d: &Dataset,
    categorical: &BTreeMap<String, usize>,
    cfg: &FcmiConfig,
) -> Result<(Dataset, BTreeMap<String, TrainingReport>)> {
    for c in 0..d.n_cols() {
        if d.numeric(c).is_err() {
            return Err(Error::Usage(format!(
                "fcmi_impute requires a numeric-encoded dataset; column '{}' is categorical",
                d.names()[c]
            )));
        }
    }

    let mut order: Vec<usize> = (0..d.n_cols()).filter(|&c| d.missing_count(c) > 0).collect();
    order.sort_by_key(|&c| (d.missing_count(c), c));

    let mut current = d.clone();
    let mut reports = BTreeMap::new();
    let all_names: Vec<String> = d.names().to_vec();
    for target in order {
        let name = all_names[target].clone();
        let kind = match categorical.get(&name) {
            Some(&classes) => ModelKind::Softmax(classes),
            None => ModelKind::Linear,
        };
        let report = impute_one_column(&mut current, target, kind, cfg, &all_names)?;
        reports.insert(name, report);
    }
    debug_assert_eq!(current.total_missing(), 0);
    Ok((current, reports))
}

fn impute_one_column(
    current: &mut Dataset,
    target: usize,
    kind: ModelKind,
    cfg: &FcmiConfig,
    all_names: &[String],
) -> Result<TrainingReport> {
    let name = &all_names[target];
    let cv = correlation_vector(current, name, all_names)?;
    let selection = match select_predictors(&cv, cfg.k) {
        Ok(sel) => sel,
        Err(Error::NoPredictors(_)) => {
            fallback_fill(current, target, kind)?;
            return Ok(TrainingReport::fallback("no-predictors"));
        }
        Err(e) => return Err(e),
    };
    let p_dist = to_distribution(&selection.r_values)?;

    let target_mask = current.mask(target).to_vec();
    let train_rows: Vec<usize> = (0..current.n_rows()).filter(|&r| !target_mask[r]).collect();
    let miss_rows: Vec<usize> = (0..current.n_rows()).filter(|&r| target_mask[r]).collect();
    if train_rows.len() < min_training_rows(selection.predictors.len()) {
        fallback_fill(current, target, kind)?;
        return Ok(TrainingReport::fallback("insufficient-data"));
    }

    // Predictor columns with their own masked cells mean-filled.
    let mut filled: Vec<Vec<f64>> = Vec::with_capacity(selection.predictors.len());
    for pname in &selection.predictors {
        let idx = current.require_column(pname)?;
        let values = current.numeric(idx)?;
        let mask = current.mask(idx);
        let stats = column_stats(current, pname)?;
        let mean = stats
            .mean
            .ok_or_else(|| Error::FullyMissingColumn(pname.clone()))?;
        filled.push(
            values
                .iter()
                .zip(mask)
                .map(|(&v, &m)| if m { mean } else { v })
                .collect(),
        );
    }
    let take = |rows: &[usize]| -> Vec<Vec<f64>> {
        filled
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect()
    };

    let y_train: Vec<f64> = {
        let values = current.numeric(target)?;
        train_rows.iter().map(|&r| values[r]).collect()
    };
    let (model, report) =
        match train_regressor(&y_train, &take(&train_rows), &p_dist, kind, cfg, name) {
            Ok(ok) => ok,
            Err(Error::InsufficientData(..)) => {
                fallback_fill(current, target, kind)?;
                return Ok(TrainingReport::fallback("insufficient-data"));
            }
            Err(e) => return Err(e),
        };
    let predictions = predict_missing(&model, &take(&miss_rows))?;
    for (&row, &value) in miss_rows.iter().zip(&predictions) {
        current.fill_cell(row, target, Value::Num(value));
    }
    Ok(report)
}

/// Mean (linear) or mode-code (softmax) fill for a column no model could be
/// trained for.
fn fallback_fill(current: &mut Dataset, target: usize, kind: ModelKind) -> Result<()> {
    let name = current.names()[target].clone();
    let stats = column_stats(current, &name)?;
    let value = match kind {
        ModelKind::Linear => stats.mean,
        ModelKind::Softmax(_) => match stats.mode {
            Some(Value::Num(v)) => Some(v),
            _ => None,
        },
    }
    .ok_or(Error::FullyMissingColumn(name))?;
    let rows: Vec<usize> = (0..current.n_rows())
        .filter(|&r| current.is_missing(r, target))
        .collect();
    for row in rows {
        current.fill_cell(row, target, Value::Num(value));
    }
    Ok(())
}

/// Convenience wrapper for mixed datasets: label-encodes every categorical
/// column, imputes, and decodes the predictions back to category strings.
pub fn fcmi_impute_mixed(
    d: &Dataset,
    cfg: &FcmiConfig,
) -> Result<(Dataset, BTreeMap<String, TrainingReport>)> {
    let mut encoded = d.clone();
    let mut maps = Vec::new();
    let mut categorical = BTreeMap::new();
    for c in 0..d.n_cols() {
        if let ColumnData::Categorical(_) = d.column(c) {
            let name = d.names()[c].clone();
            let (next, map) = crate::dataset::label_encode(&encoded, &name)?;
            categorical.insert(name, map.cardinality());
            maps.push(map);
            encoded = next;
        }
    }
    let (imputed, reports) = fcmi_impute(&encoded, &categorical, cfg)?;
    let mut out = imputed;
    for map in &maps {
        out = crate::dataset::label_decode(&out, map)?;
    }
    Ok((out, reports))
}
