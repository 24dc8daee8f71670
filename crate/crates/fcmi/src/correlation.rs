//! Pearson correlation over pairwise-complete observations, top-K predictor
//! selection, and the correlation-distribution / KL machinery used by the
//! composite loss.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Floor added to |r| before normalization so all-zero vectors still map
/// to a valid distribution.
pub const DIST_EPSILON: f64 = 1e-6;

/// Pearson r over rows where both sides are observed. `None` when fewer
/// than 2 complete pairs exist or either side is constant on them.
pub fn pearson(x: &[f64], x_mask: &[bool], y: &[f64], y_mask: &[bool]) -> Result<Option<f64>> {
    if x.len() != y.len() || x.len() != x_mask.len() || y.len() != y_mask.len() {
        return Err(Error::Usage(format!(
            "pearson length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .zip(x_mask.iter().zip(y_mask))
        .filter(|(_, (&mx, &my))| !mx && !my)
        .map(|((&a, &b), _)| (a, b))
        .collect();
    Ok(pearson_complete(&pairs))
}

/// Pearson over fully observed sequences.
pub fn pearson_dense(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Usage(format!(
            "pearson length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    Ok(pearson_complete(&pairs))
}

fn pearson_complete(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for &(a, b) in pairs {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return None;
    }
    Some((cov / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0))
}

/// Correlations of every candidate column against one target column.
/// Entries keep the dataset's column order; undefined r stays `None`.
#[derive(Debug, Clone)]
pub struct CorrelationVector {
    pub target: String,
    pub entries: Vec<(String, Option<f64>)>,
}

pub fn correlation_vector(d: &Dataset, target: &str, candidates: &[String]) -> Result<CorrelationVector> {
    let t_idx = d.require_column(target)?;
    let t_vals = d.numeric(t_idx)?;
    let t_mask = d.mask(t_idx);
    let mut entries = Vec::new();
    for name in candidates {
        if name == target {
            continue;
        }
        let idx = d.require_column(name)?;
        // Correlation is undefined for categorical candidates; the target
        // itself must be numeric (or already label-encoded).
        let r = match d.numeric(idx) {
            Ok(values) => pearson(t_vals, t_mask, values, d.mask(idx))?,
            Err(_) => None,
        };
        entries.push((name.clone(), r));
    }
    Ok(CorrelationVector {
        target: target.to_string(),
        entries,
    })
}

/// A target column with its chosen predictors, strongest |r| first.
#[derive(Debug, Clone)]
pub struct PredictorSelection {
    pub target: String,
    pub predictors: Vec<String>,
    pub r_values: Vec<f64>,
}

/// Top-K candidates ranked by descending |r|, ties broken by the earlier
/// column position. Undefined-r candidates never qualify.
pub fn select_predictors(cv: &CorrelationVector, k: usize) -> Result<PredictorSelection> {
    let mut defined: Vec<(usize, &str, f64)> = cv
        .entries
        .iter()
        .enumerate()
        .filter_map(|(pos, (name, r))| r.map(|r| (pos, name.as_str(), r)))
        .collect();
    if defined.is_empty() {
        return Err(Error::NoPredictors(cv.target.clone()));
    }
    defined.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()).then(a.0.cmp(&b.0)));
    defined.truncate(k);
    Ok(PredictorSelection {
        target: cv.target.clone(),
        predictors: defined.iter().map(|e| e.1.to_string()).collect(),
        r_values: defined.iter().map(|e| e.2).collect(),
    })
}

/// Probability vector obtained from correlation coefficients by
/// epsilon-floored absolute-value normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDistribution {
    probs: Vec<f64>,
}

impl CorrelationDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// probs_i = (|r_i| + eps) / sum_j (|r_j| + eps).
pub fn to_distribution(r_values: &[f64]) -> Result<CorrelationDistribution> {
    if r_values.is_empty() {
        return Err(Error::Usage("cannot build a distribution from an empty vector".into()));
    }
    let weights: Vec<f64> = r_values.iter().map(|r| r.abs() + DIST_EPSILON).collect();
    let total: f64 = weights.iter().sum();
    Ok(CorrelationDistribution {
        probs: weights.into_iter().map(|w| w / total).collect(),
    })
}

/// KL(P || Q) in nats, with Q clamped to [1e-6, 1] and renormalized.
pub fn kl_divergence(p: &CorrelationDistribution, q: &CorrelationDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Usage(format!(
            "KL length mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let clamped: Vec<f64> = q.probs.iter().map(|&v| v.clamp(1e-6, 1.0)).collect();
    let total: f64 = clamped.iter().sum();
    let kl = p
        .probs
        .iter()
        .zip(&clamped)
        .map(|(&pi, &qi)| if pi > 0.0 { pi * (pi / (qi / total)).ln() } else { 0.0 })
        .sum::<f64>();
    Ok(kl.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::dataset::{read_csv_from, default_missing_tokens};
    use proptest::prelude::*;

    const NO_MASK: [bool; 3] = [false; 3];

    #[test]
    fn exact_positive_linearity() {
        let r = pearson(&[1.0, 2.0, 3.0], &NO_MASK, &[2.0, 4.0, 6.0], &NO_MASK).unwrap();
        assert_abs_diff_eq!(r.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_negative_linearity() {
        let r = pearson(&[1.0, 2.0, 3.0], &NO_MASK, &[3.0, 2.0, 1.0], &NO_MASK).unwrap();
        assert_abs_diff_eq!(r.unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_computed_value() {
        // Oracle by hand: cov=3, var_x=2, var_y=14/3, r = 3/sqrt(28/3).
        let r = pearson(&[1.0, 2.0, 3.0], &NO_MASK, &[1.0, 2.0, 4.0], &NO_MASK)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(r, 3.0 / (28.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.9820, epsilon = 5e-5);
    }

    #[test]
    fn pairwise_complete_skips_masked_rows() {
        let r = pearson(
            &[1.0, 2.0, f64::NAN, 4.0],
            &[false, false, true, false],
            &[2.0, 4.0, 6.0, 8.0],
            &[false; 4],
        )
        .unwrap();
        assert_eq!(r, Some(1.0));
    }

    #[test]
    fn undefined_on_constant_or_short() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &NO_MASK, &[1.0, 2.0, 3.0], &NO_MASK).unwrap(), None);
        assert_eq!(pearson_dense(&[1.0], &[2.0]).unwrap(), None);
    }

    #[test]
    fn length_mismatch_is_usage_error() {
        assert!(pearson_dense(&[1.0, 2.0], &[1.0]).is_err());
    }

    fn toy_dataset() -> crate::dataset::Dataset {
        read_csv_from(
            "t,c1,c2,c3,c4\n1,5,2,9,3\n2,5,4,1,1\n3,5,6,4,4\n4,5,8,2,2\n".as_bytes(),
            &default_missing_tokens(),
        )
        .unwrap()
    }

    #[test]
    fn vector_finds_exact_proxy_and_flags_constant() {
        let d = toy_dataset();
        let names: Vec<String> = d.names().to_vec();
        let cv = correlation_vector(&d, "t", &names).unwrap();
        assert_eq!(cv.entries.len(), 4);
        assert!(cv.entries.iter().all(|(n, _)| n != "t"));
        let c2 = cv.entries.iter().find(|(n, _)| n == "c2").unwrap();
        assert_abs_diff_eq!(c2.1.unwrap(), 1.0, epsilon = 1e-12);
        let c1 = cv.entries.iter().find(|(n, _)| n == "c1").unwrap();
        assert_eq!(c1.1, None);
    }

    #[test]
    fn selection_ranks_by_absolute_value() {
        // Enumeration oracle: sorting {a:0.9, b:-0.95, c:0.1, d:0.5} by |r|
        // descending gives b, a, d, c.
        let cv = CorrelationVector {
            target: "t".into(),
            entries: vec![
                ("a".into(), Some(0.9)),
                ("b".into(), Some(-0.95)),
                ("c".into(), Some(0.1)),
                ("d".into(), Some(0.5)),
            ],
        };
        let sel = select_predictors(&cv, 3).unwrap();
        assert_eq!(sel.predictors, vec!["b", "a", "d"]);
        assert_eq!(sel.r_values, vec![-0.95, 0.9, 0.5]);
    }

    #[test]
    fn selection_returns_all_when_short() {
        let cv = CorrelationVector {
            target: "t".into(),
            entries: vec![("a".into(), Some(0.2)), ("b".into(), Some(0.3))],
        };
        assert_eq!(select_predictors(&cv, 3).unwrap().predictors.len(), 2);
    }

    #[test]
    fn selection_tie_goes_to_earlier_column() {
        let cv = CorrelationVector {
            target: "t".into(),
            entries: vec![("a".into(), Some(0.5)), ("b".into(), Some(0.5))],
        };
        assert_eq!(select_predictors(&cv, 1).unwrap().predictors, vec!["a"]);
    }

    #[test]
    fn selection_without_defined_entries_fails() {
        let cv = CorrelationVector {
            target: "t".into(),
            entries: vec![("a".into(), None)],
        };
        assert!(matches!(select_predictors(&cv, 3), Err(Error::NoPredictors(_))));
    }

    #[test]
    fn distribution_hand_normalization() {
        let d = to_distribution(&[0.8, -0.4, 0.2]).unwrap();
        assert_abs_diff_eq!(d.probs()[0], 0.8 / 1.4, epsilon = 1e-5);
        assert_abs_diff_eq!(d.probs()[1], 0.4 / 1.4, epsilon = 1e-5);
        assert_abs_diff_eq!(d.probs()[2], 0.2 / 1.4, epsilon = 1e-5);
    }

    #[test]
    fn distribution_symmetry_and_zero_floor() {
        let d = to_distribution(&[0.5, 0.5]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
        let z = to_distribution(&[0.0, 0.0, 0.0]).unwrap();
        for &p in z.probs() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn distribution_empty_input_rejected() {
        assert!(to_distribution(&[]).is_err());
    }

    #[test]
    fn kl_zero_iff_equal() {
        let p = to_distribution(&[0.7, 0.2, 0.1]).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_values() {
        let p = CorrelationDistribution { probs: vec![0.5, 0.25, 0.25] };
        let q = CorrelationDistribution { probs: vec![0.25, 0.5, 0.25] };
        // 0.5 ln 2 + 0.25 ln(0.5) = 0.25 ln 2
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 0.25 * 2.0f64.ln(), epsilon = 1e-12);

        let p = CorrelationDistribution { probs: vec![0.9, 0.1] };
        let q = CorrelationDistribution { probs: vec![0.5, 0.5] };
        assert_abs_diff_eq!(kl_divergence(&p, &q).unwrap(), 0.3681, epsilon = 5e-5);
        assert_abs_diff_eq!(kl_divergence(&q, &p).unwrap(), 0.5108, epsilon = 5e-5);
    }

    #[test]
    fn kl_length_mismatch_rejected() {
        let p = to_distribution(&[0.5]).unwrap();
        let q = to_distribution(&[0.5, 0.5]).unwrap();
        assert!(kl_divergence(&p, &q).is_err());
    }

    /// Definitional oracle: filter complete pairs explicitly, then apply
    /// cov/(sx*sy) directly.
    pub(crate) fn pearson_oracle(x: &[f64], xm: &[bool], y: &[f64], ym: &[bool]) -> Option<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..x.len() {
            if !xm[i] && !ym[i] {
                xs.push(x[i]);
                ys.push(y[i]);
            }
        }
        let n = xs.len();
        if n < 2 {
            return None;
        }
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n as f64;
        let sx = (xs.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n as f64).sqrt();
        let sy = (ys.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n as f64).sqrt();
        if sx == 0.0 || sy == 0.0 {
            return None;
        }
        Some(cov / (sx * sy))
    }

    /// Exhaustive check against the definitional oracle on every masked
    /// input of length <= 6 over values {0,1,2}.
    #[test]
    fn brute_force_equivalence_small_inputs() {
        for len in 2usize..=6 {
            // Encode (value, mask) per cell as a digit in base 4: values 0..3
            // where 3 means masked.
            let cells = 4usize.pow(len as u32);
            for xc in 0..cells {
                let (x, xm) = decode(xc, len);
                // Pair against a fixed spread of y patterns to keep runtime sane.
                for yc in (0..cells).step_by(7) {
                    let (y, ym) = decode(yc, len);
                    let got = pearson(&x, &xm, &y, &ym).unwrap();
                    let want = pearson_oracle(&x, &xm, &y, &ym);
                    match (got, want) {
                        (None, None) => {}
                        (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12, "{a} vs {b}"),
                        other => panic!("mismatch: {other:?} for x={x:?} y={y:?}"),
                    }
                }
            }
        }

        fn decode(mut code: usize, len: usize) -> (Vec<f64>, Vec<bool>) {
            let mut vals = Vec::with_capacity(len);
            let mut mask = Vec::with_capacity(len);
            for _ in 0..len {
                let digit = code % 4;
                code /= 4;
                if digit == 3 {
                    vals.push(f64::NAN);
                    mask.push(true);
                } else {
                    vals.push(digit as f64);
                    mask.push(false);
                }
            }
            (vals, mask)
        }
    }

    proptest! {
        #[test]
        fn pearson_symmetry_and_self(xs in proptest::collection::vec(-100.0f64..100.0, 2..20),
                                     ys in proptest::collection::vec(-100.0f64..100.0, 2..20)) {
            let n = xs.len().min(ys.len());
            let (xs, ys) = (&xs[..n], &ys[..n]);
            let ab = pearson_dense(xs, ys).unwrap();
            let ba = pearson_dense(ys, xs).unwrap();
            match (ab, ba) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                other => prop_assert!(false, "asymmetric definedness {other:?}"),
            }
            if let Some(r) = pearson_dense(xs, xs).unwrap() {
                prop_assert!((r - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn pearson_affine_invariance(xs in proptest::collection::vec(-10.0f64..10.0, 3..15),
                                     ys in proptest::collection::vec(-10.0f64..10.0, 3..15),
                                     a in 0.01f64..50.0, b in -100.0f64..100.0) {
            let n = xs.len().min(ys.len());
            let (xs, ys) = (&xs[..n], &ys[..n]);
            let scaled: Vec<f64> = xs.iter().map(|v| a * v + b).collect();
            let r1 = pearson_dense(xs, ys).unwrap();
            let r2 = pearson_dense(&scaled, ys).unwrap();
            match (r1, r2) {
                (Some(p), Some(q)) => prop_assert!((p - q).abs() <= 1e-9),
                (None, None) => {}
                other => prop_assert!(false, "definedness changed under affine map {other:?}"),
            }
        }

        #[test]
        fn distribution_sums_to_one_and_permutes(rs in proptest::collection::vec(-1.0f64..1.0, 1..8),
                                                 seed in 0u64..1000) {
            let d = to_distribution(&rs).unwrap();
            let total: f64 = d.probs().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);

            // Permutation equivariance: rotate by seed.
            let shift = (seed as usize) % rs.len();
            let mut rotated = rs.clone();
            rotated.rotate_left(shift);
            let dr = to_distribution(&rotated).unwrap();
            let mut expected = d.probs().to_vec();
            expected.rotate_left(shift);
            for (a, b) in dr.probs().iter().zip(&expected) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn selection_scale_invariant(scale in 0.001f64..1000.0, col in 1usize..5) {
            use crate::dataset::{ColumnData, Dataset};
            let d = toy_dataset();
            let names: Vec<String> = d.names().to_vec();
            let baseline = select_predictors(&correlation_vector(&d, "t", &names).unwrap(), 3).unwrap();

            // Scale one candidate column by a positive constant; the |r|
            // ranking must not change.
            let data: Vec<ColumnData> = (0..d.n_cols())
                .map(|c| match d.column(c) {
                    ColumnData::Numeric(v) if c == col => {
                        ColumnData::Numeric(v.iter().map(|x| x * scale).collect())
                    }
                    other => other.clone(),
                })
                .collect();
            let masks = (0..d.n_cols()).map(|c| d.mask(c).to_vec()).collect();
            let scaled = Dataset::new(names.clone(), data, masks).unwrap();
            let sel = select_predictors(&correlation_vector(&scaled, "t", &names).unwrap(), 3).unwrap();
            prop_assert_eq!(sel.predictors, baseline.predictors);
        }
    }
}
