use super::data::{feature_matrix, Matrix};
use super::params::ParamMap;
use crate::error::{bail, Result};
use crate::frame::Frame;

/// Per-dimension maximum absolute value.
pub fn fit(frame: &Frame, params: &ParamMap) -> Result<Vec<f64>> {
    let x = feature_matrix(frame, params.string("inputCol")?)?;
    if x.rows == 0 {
        bail!(EmptyTrainingSet, "cannot fit a scaler on an empty frame");
    }
    Ok(max_abs(&x))
}

pub(crate) fn max_abs(x: &Matrix) -> Vec<f64> {
    let mut m = vec![0.0f64; x.cols];
    for i in 0..x.rows {
        for (mj, v) in m.iter_mut().zip(x.row(i)) {
            *mj = mj.max(v.abs());
        }
    }
    m
}

pub fn scale(row: &[f64], m: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(m)
        .map(|(v, mj)| if *mj == 0.0 { *v } else { v / mj })
        .collect()
}
