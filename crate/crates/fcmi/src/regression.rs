//! Small dense regression solvers shared by the imputers: ordinary least
//! squares via normal equations and a plain gradient-descent softmax fit.

use crate::error::{Error, Result};

/// Solve A x = b by Gaussian elimination with partial pivoting.
/// Returns `None` when A is numerically singular.
pub fn solve_linear_system(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// OLS fit of y on feature columns with an intercept, via the normal
/// equations. Falls back to ridge damping 1e-6 on a singular system;
/// `ridged` reports whether that happened.
pub struct OlsFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub ridged: bool,
}

pub fn ols_fit(features: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let k = features.len();
    let n = y.len();
    for col in features {
        if col.len() != n {
            return Err(Error::Usage("feature/target length mismatch".into()));
        }
    }
    if n == 0 {
        return Err(Error::Usage("cannot fit on an empty batch".into()));
    }

    // Gram matrix over [1, x1..xk].
    let dim = k + 1;
    let mut gram = vec![vec![0.0f64; dim]; dim];
    let mut rhs = vec![0.0f64; dim];
    let col = |j: usize, row: usize| -> f64 {
        if j == 0 {
            1.0
        } else {
            features[j - 1][row]
        }
    };
    for i in 0..dim {
        for j in i..dim {
            let s: f64 = (0..n).map(|r| col(i, r) * col(j, r)).sum();
            gram[i][j] = s;
            gram[j][i] = s;
        }
        rhs[i] = (0..n).map(|r| col(i, r) * y[r]).sum();
    }

    let (solution, ridged) = match solve_linear_system(&gram, &rhs) {
        Some(sol) => (sol, false),
        None => {
            let mut damped = gram.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += 1e-6;
            }
            let sol = solve_linear_system(&damped, &rhs)
                .ok_or_else(|| Error::Schema("singular design matrix even with ridge damping".into()))?;
            (sol, true)
        }
    };
    Ok(OlsFit {
        intercept: solution[0],
        weights: solution[1..].to_vec(),
        ridged,
    })
}

pub fn ols_predict(fit: &OlsFit, features: &[Vec<f64>], row: usize) -> f64 {
    fit.intercept
        + fit
            .weights
            .iter()
            .zip(features)
            .map(|(w, col)| w * col[row])
            .sum::<f64>()
}

/// Row-wise softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Multinomial logistic model fit by full-batch gradient descent on mean
/// cross-entropy. Features are used as given (standardize before calling).
pub struct SoftmaxFit {
    pub weights: Vec<Vec<f64>>, // classes x features
    pub bias: Vec<f64>,
    pub classes: usize,
}

impl SoftmaxFit {
    pub fn logits(&self, features: &[Vec<f64>], row: usize) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                self.bias[c]
                    + self.weights[c]
                        .iter()
                        .zip(features)
                        .map(|(w, col)| w * col[row])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict_class(&self, features: &[Vec<f64>], row: usize) -> usize {
        let logits = self.logits(features, row);
        logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(c, _)| c)
            .unwrap_or(0)
    }
}

pub fn softmax_fit(
    features: &[Vec<f64>],
    labels: &[usize],
    classes: usize,
    iters: usize,
    lr: f64,
) -> Result<SoftmaxFit> {
    let n = labels.len();
    if n == 0 || classes == 0 {
        return Err(Error::Usage("cannot fit softmax on an empty batch".into()));
    }
    let k = features.len();
    let mut fit = SoftmaxFit {
        weights: vec![vec![0.0; k]; classes],
        bias: vec![0.0; classes],
        classes,
    };
    for _ in 0..iters {
        let mut grad_w = vec![vec![0.0f64; k]; classes];
        let mut grad_b = vec![0.0f64; classes];
        for row in 0..n {
            let probs = softmax(&fit.logits(features, row));
            for c in 0..classes {
                let g = (probs[c] - if labels[row] == c { 1.0 } else { 0.0 }) / n as f64;
                grad_b[c] += g;
                for (j, col) in features.iter().enumerate() {
                    grad_w[c][j] += g * col[row];
                }
            }
        }
        for c in 0..classes {
            fit.bias[c] -= lr * grad_b[c];
            for j in 0..k {
                fit.weights[c][j] -= lr * grad_w[c][j];
            }
        }
    }
    Ok(fit)
}

/// Mean and population std of a slice; std 0 is reported as-is.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ols_recovers_exact_plane() {
        let x1: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..20).map(|i| ((i * 7) % 13) as f64).collect();
        let y: Vec<f64> = (0..20).map(|i| 2.0 * x1[i] + 3.0 * x2[i] + 1.0).collect();
        let fit = ols_fit(&[x1, x2], &y).unwrap();
        assert_abs_diff_eq!(fit.weights[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.weights[1], 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-8);
        assert!(!fit.ridged);
    }

    #[test]
    fn ols_ridge_fallback_on_duplicate_columns() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 4.0 * v).collect();
        let fit = ols_fit(&[x.clone(), x.clone()], &y).unwrap();
        assert!(fit.ridged);
        // The two duplicate columns share the weight.
        assert_abs_diff_eq!(fit.weights[0] + fit.weights[1], 4.0, epsilon = 1e-3);
    }

    #[test]
    fn softmax_separable_problem() {
        let x: Vec<f64> = (0..40).map(|i| if i < 20 { -1.0 } else { 1.0 }).collect();
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let fit = softmax_fit(&[x.clone()], &labels, 2, 300, 0.5).unwrap();
        for row in 0..40 {
            assert_eq!(fit.predict_class(&[x.clone()], row), labels[row]);
        }
    }
}
