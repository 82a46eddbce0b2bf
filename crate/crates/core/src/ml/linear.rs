//! Binary linear classifiers trained by full-batch gradient descent.

use super::data::{binary_labels, block_reduce, feature_matrix, map_rows, Matrix};
use super::params::ParamMap;
use crate::error::{bail, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearLoss {
    /// Logistic loss on labels in {0, 1}.
    Logistic,
    /// Hinge loss on labels mapped to {-1, +1}.
    Hinge,
}

/// Objective value and gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Mean loss over the rows plus `reg/2 * |w|^2`, and its (sub)gradient.
pub fn loss_and_gradient(kind: LinearLoss, x: &Matrix, y: &[f64], w: &[f64], b: f64, reg: f64) -> Gradient {
    let d = x.cols;
    let n = x.rows;
    let sums = block_reduce(n, d + 2, |range, acc| {
        for i in range {
            let xi = x.row(i);
            let z = dot(w, xi) + b;
            let (loss, dz) = match kind {
                LinearLoss::Logistic => (softplus(z) - y[i] * z, sigmoid(z) - y[i]),
                LinearLoss::Hinge => {
                    let s = 2.0 * y[i] - 1.0;
                    let margin = s * z;
                    if margin < 1.0 {
                        (1.0 - margin, -s)
                    } else {
                        (0.0, 0.0)
                    }
                }
            };
            if dz != 0.0 {
                for (g, xv) in acc[..d].iter_mut().zip(xi) {
                    *g += dz * xv;
                }
            }
            acc[d] += dz;
            acc[d + 1] += loss;
        }
    });
    let scale = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    let weights = (0..d).map(|j| sums[j] * scale + reg * w[j]).collect();
    let penalty = 0.5 * reg * w.iter().map(|v| v * v).sum::<f64>();
    Gradient {
        loss: sums[d + 1] * scale + penalty,
        weights,
        intercept: sums[d] * scale,
    }
}

/// Objective value only.
pub fn loss(kind: LinearLoss, x: &Matrix, y: &[f64], w: &[f64], b: f64, reg: f64) -> f64 {
    loss_and_gradient(kind, x, y, w, b, reg).loss
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

struct Bounds {
    lower: Option<Vec<f64>>,
    upper: Option<Vec<f64>>,
    lower_b: Option<f64>,
    upper_b: Option<f64>,
}

fn bounds(params: &ParamMap, d: usize) -> Result<Bounds> {
    let coef = |name: &str| -> Result<Option<Vec<f64>>> {
        match params.matrix(name) {
            None => Ok(None),
            Some([row]) if row.len() == d => Ok(Some(row.clone())),
            Some(m) => bail!(
                ParamTypeError,
                "parameter {name:?} must be a 1 x {d} matrix, got {} row(s)",
                m.len()
            ),
        }
    };
    let icpt = |name: &str| -> Result<Option<f64>> {
        match params.doubles(name) {
            None => Ok(None),
            Some([v]) => Ok(Some(*v)),
            Some(v) => bail!(ParamTypeError, "parameter {name:?} must have one entry, got {}", v.len()),
        }
    };
    Ok(Bounds {
        lower: coef("lowerBoundsOnCoefficients")?,
        upper: coef("upperBoundsOnCoefficients")?,
        lower_b: icpt("lowerBoundsOnIntercepts")?,
        upper_b: icpt("upperBoundsOnIntercepts")?,
    })
}

/// Trains on the frame's feature and label columns. Weights start at zero
/// and exactly `maxIter` steps are taken.
pub fn fit(kind: LinearLoss, frame: &Frame, params: &ParamMap) -> Result<LinearFit> {
    let x = feature_matrix(frame, params.string("featuresCol")?)?;
    let y = binary_labels(frame, params.string("labelCol")?)?;
    if x.rows == 0 {
        bail!(EmptyTrainingSet, "cannot train on an empty frame");
    }
    let max_iter = params.int("maxIter")?;
    if max_iter < 0 {
        bail!(ParamTypeError, "parameter \"maxIter\" must not be negative, got {max_iter}");
    }
    let step = params.double("stepSize")?;
    let reg = params.double("regParam")?;
    let fit_intercept = params.boolean("fitIntercept")?;
    let bounds = match kind {
        LinearLoss::Logistic => bounds(params, x.cols)?,
        LinearLoss::Hinge => Bounds {
            lower: None,
            upper: None,
            lower_b: None,
            upper_b: None,
        },
    };
    let mut w = vec![0.0; x.cols];
    let mut b = 0.0;
    for _ in 0..max_iter {
        let g = loss_and_gradient(kind, &x, &y, &w, b, reg);
        for (wj, gj) in w.iter_mut().zip(&g.weights) {
            *wj -= step * gj;
        }
        if fit_intercept {
            b -= step * g.intercept;
        }
        if let Some(lo) = &bounds.lower {
            w.iter_mut().zip(lo).for_each(|(v, l)| *v = v.max(*l));
        }
        if let Some(hi) = &bounds.upper {
            w.iter_mut().zip(hi).for_each(|(v, h)| *v = v.min(*h));
        }
        if let Some(l) = bounds.lower_b {
            b = b.max(l);
        }
        if let Some(h) = bounds.upper_b {
            b = b.min(h);
        }
    }
    Ok(LinearFit { weights: w, intercept: b })
}

/// Class 1 where `w.x + b >= 0`.
pub fn predict(x: &Matrix, weights: &[f64], intercept: f64) -> Vec<f64> {
    map_rows(x, |row| if dot(weights, row) + intercept >= 0.0 { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d(points: &[(f64, f64)]) -> (Matrix, Vec<f64>) {
        let x = Matrix::new(points.iter().map(|p| p.0).collect(), points.len(), 1);
        (x, points.iter().map(|p| p.1).collect())
    }

    #[test]
    fn hinge_step_from_zero() {
        let (x, y) = one_d(&[(1.0, 1.0)]);
        let g = loss_and_gradient(LinearLoss::Hinge, &x, &y, &[0.0], 0.0, 0.0);
        assert_eq!(g.weights, vec![-1.0]);
        assert_eq!(g.intercept, -1.0);
        assert_eq!(g.loss, 1.0);
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let (x, y) = one_d(&[(-1.0, 0.0), (1.0, 1.0)]);
        let g = loss_and_gradient(LinearLoss::Logistic, &x, &y, &[0.0], 0.0, 0.0);
        // mean of (0.5 - y) * x = ((0.5)(-1) + (-0.5)(1)) / 2
        assert_eq!(g.weights, vec![-0.5]);
        assert_eq!(g.intercept, 0.0);
        assert!((g.loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn regularization_adds_to_weight_gradient() {
        let (x, y) = one_d(&[(1.0, 1.0)]);
        let g = loss_and_gradient(LinearLoss::Hinge, &x, &y, &[2.0], 0.0, 0.5);
        // margin 2 >= 1, so only the penalty contributes
        assert_eq!(g.weights, vec![1.0]);
        assert_eq!(g.loss, 1.0);
    }
}
