//! Multinomial naive Bayes with additive smoothing.

use super::data::{block_reduce, feature_matrix, label_vector, map_rows, Matrix};
use super::params::ParamMap;
use crate::error::{bail, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesFit {
    /// Distinct labels in ascending order; class `c` predicts `labels[c]`.
    pub labels: Vec<f64>,
    /// Log prior per class.
    pub pi: Vec<f64>,
    /// Log likelihood per class and feature, row-major `k x d`.
    pub theta: Vec<Vec<f64>>,
}

pub(crate) fn check_non_negative(x: &Matrix) -> Result<()> {
    if let Some(pos) = x.data.iter().position(|v| *v < 0.0 || v.is_nan()) {
        let (i, j) = (pos / x.cols.max(1), pos % x.cols.max(1));
        bail!(
            NegativeFeature,
            "row {i}, feature {j}: value {} is negative; naive Bayes needs non-negative features",
            x.data[pos]
        );
    }
    Ok(())
}

pub fn fit(frame: &Frame, params: &ParamMap) -> Result<NaiveBayesFit> {
    let x = feature_matrix(frame, params.string("featuresCol")?)?;
    let y = label_vector(frame, params.string("labelCol")?)?;
    if x.rows == 0 {
        bail!(EmptyTrainingSet, "cannot train on an empty frame");
    }
    check_non_negative(&x)?;
    if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| **v < 0.0 || v.fract() != 0.0) {
        bail!(BadLabel, "row {i}: label {v} is not a non-negative integer");
    }
    let smoothing = params.double("smoothing")?;
    if !(smoothing >= 0.0) {
        bail!(ParamTypeError, "parameter \"smoothing\" must not be negative, got {smoothing}");
    }
    let mut labels = y.clone();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    let k = labels.len();
    let d = x.cols;
    // per class: d feature sums followed by the row count
    let width = d + 1;
    let sums = block_reduce(x.rows, k * width, |range, acc| {
        for i in range {
            let c = labels.partition_point(|l| *l < y[i]);
            let slot = &mut acc[c * width..(c + 1) * width];
            for (s, v) in slot[..d].iter_mut().zip(x.row(i)) {
                *s += v;
            }
            slot[d] += 1.0;
        }
    });
    let n = x.rows as f64;
    let mut pi = Vec::with_capacity(k);
    let mut theta = Vec::with_capacity(k);
    for c in 0..k {
        let slot = &sums[c * width..(c + 1) * width];
        pi.push((slot[d] / n).ln());
        let total: f64 = slot[..d].iter().sum::<f64>() + smoothing * d as f64;
        theta.push(slot[..d].iter().map(|s| ((s + smoothing) / total).ln()).collect());
    }
    Ok(NaiveBayesFit { labels, pi, theta })
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = c;
        }
    }
    best
}

/// Predicted label per row. With thresholds, the class maximizing
/// `p_c / t_c` over the normalized posteriors wins.
pub fn predict(model: &NaiveBayesFit, x: &Matrix, thresholds: Option<&[f64]>) -> Result<Vec<f64>> {
    let d = model.theta.first().map_or(0, Vec::len);
    if x.rows > 0 && x.cols != d {
        bail!(RaggedVectors, "model expects {d} features, input has {}", x.cols);
    }
    check_non_negative(x)?;
    if let Some(t) = thresholds {
        if t.len() != model.labels.len() {
            bail!(
                ParamTypeError,
                "parameter \"thresholds\" needs {} entries, one per class, got {}",
                model.labels.len(),
                t.len()
            );
        }
    }
    Ok(map_rows(x, |row| {
        let mut scores: Vec<f64> = model
            .pi
            .iter()
            .zip(&model.theta)
            .map(|(p, th)| {
                p + row
                    .iter()
                    .zip(th)
                    .filter(|(v, _)| **v != 0.0)
                    .map(|(v, t)| v * t)
                    .sum::<f64>()
            })
            .collect();
        if let Some(t) = thresholds {
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm: f64 = scores.iter().map(|s| (s - max).exp()).sum();
            for (s, tc) in scores.iter_mut().zip(t) {
                let p = (*s - max).exp() / norm;
                *s = if *tc == 0.0 { f64::INFINITY } else { p / tc };
            }
        }
        model.labels[argmax(&scores)]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(rows: &[(&[f64], f64)], s: f64) -> (NaiveBayesFit, Matrix) {
        let d = rows[0].0.len();
        let x = Matrix::new(rows.iter().flat_map(|r| r.0.iter().copied()).collect(), rows.len(), d);
        let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let mut labels = y.clone();
        labels.sort_by(f64::total_cmp);
        labels.dedup();
        // independent oracle: straight loops over the definition
        let mut pi = Vec::new();
        let mut theta = Vec::new();
        for l in &labels {
            let members: Vec<usize> = (0..y.len()).filter(|i| y[*i] == *l).collect();
            pi.push((members.len() as f64 / y.len() as f64).ln());
            let sums: Vec<f64> = (0..d).map(|j| members.iter().map(|i| x.row(*i)[j]).sum()).collect();
            let total: f64 = sums.iter().sum::<f64>() + s * d as f64;
            theta.push(sums.iter().map(|v| ((v + s) / total).ln()).collect());
        }
        (NaiveBayesFit { labels, pi, theta }, x)
    }

    #[test]
    fn one_hot_classes_predict_themselves() {
        let (m, x) = model(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 1.0)], 1.0);
        // theta_0 = ln(2/3), ln(1/3)
        assert!((m.theta[0][0] - (2.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(predict(&m, &x, None).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let (m, _) = model(&[(&[1.0, 0.0], 0.0), (&[0.0, 1.0], 1.0)], 1.0);
        let x = Matrix::new(vec![1.0, 1.0], 1, 2);
        assert_eq!(predict(&m, &x, None).unwrap(), vec![0.0]);
    }

    #[test]
    fn negative_input_is_rejected() {
        let (m, _) = model(&[(&[1.0, 0.0], 0.0)], 1.0);
        let x = Matrix::new(vec![1.0, -0.5], 1, 2);
        assert_eq!(predict(&m, &x, None).unwrap_err().code, crate::error::ErrorCode::NegativeFeature);
    }
}
