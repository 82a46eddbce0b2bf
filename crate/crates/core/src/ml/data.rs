use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::frame::{Column, Frame, FrameType, BLOCK_ROWS};
use crate::item::{Atomic, AtomicKind, CallContext, Value};
use crate::runtime::ModePolicy;

/// The frame behind an estimator or transformer argument. Under the
/// local-only policy plain object sequences are accepted and transposed.
pub(crate) fn frame_arg(value: &Value, cx: &CallContext) -> Result<Arc<Frame>> {
    match value {
        Value::Frame(f) => Ok(f.clone()),
        Value::Items(items) if cx.policy == ModePolicy::ForceLocal => Ok(Arc::new(Frame::infer_from_items(items)?)),
        Value::Items(items) => bail!(
            NotAFrame,
            "expected a validated frame, got a plain sequence of {} item(s); use annotate first",
            items.len()
        ),
    }
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Matrix {
        assert_eq!(data.len(), rows * cols);
        Matrix { data, rows, cols }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Reads an array-of-numbers column into a matrix.
pub(crate) fn feature_matrix(frame: &Frame, name: &str) -> Result<Matrix> {
    let (ty, col) = frame.column(name)?;
    let FrameType::Array(member) = ty else {
        bail!(NonNumericInput, "column {name:?} has type {ty}, expected an array of numbers");
    };
    if !member.is_numeric_scalar() {
        bail!(NonNumericInput, "column {name:?} has type {ty}, expected an array of numbers");
    }
    let Column::Array { offsets, values } = &**col else {
        unreachable!("array-typed column stores arrays");
    };
    let n = frame.len();
    let d = if n == 0 { 0 } else { offsets[1] - offsets[0] };
    for i in 0..n {
        let len = offsets[i + 1] - offsets[i];
        if len != d {
            bail!(RaggedVectors, "row {i} of {name:?} has {len} entries, row 0 has {d}");
        }
    }
    let data = match &**values {
        Column::Double(v) => v[offsets[0]..offsets[n]].to_vec(),
        other => (offsets[0]..offsets[n])
            .map(|j| other.as_f64(j).unwrap_or(f64::NAN))
            .collect(),
    };
    Ok(Matrix::new(data, n, d))
}

/// Numeric labels; strings are cast.
pub(crate) fn label_vector(frame: &Frame, name: &str) -> Result<Vec<f64>> {
    let (_, col) = frame.column(name)?;
    (0..frame.len())
        .map(|i| {
            let a = col.atomic_at(i);
            match a.as_ref().and_then(|a| a.cast(AtomicKind::Double).ok()) {
                Some(Atomic::Double(v)) if v.is_finite() => Ok(v),
                _ => bail!(
                    BadLabel,
                    "row {i}: label {} is not a number",
                    a.map_or_else(|| "of nested type".to_string(), |a| a.lexical())
                ),
            }
        })
        .collect()
}

pub(crate) fn binary_labels(frame: &Frame, name: &str) -> Result<Vec<f64>> {
    let labels = label_vector(frame, name)?;
    if let Some((i, v)) = labels.iter().enumerate().find(|(_, v)| **v != 0.0 && **v != 1.0) {
        bail!(BadLabel, "row {i}: label {v} is not 0 or 1");
    }
    Ok(labels)
}

/// Prediction column whose type follows the label column: strings when
/// the frame carries string labels, doubles otherwise.
pub(crate) fn prediction_column(frame: &Frame, label_col: &str, values: Vec<f64>) -> (FrameType, Column) {
    let string_labels = matches!(frame.column(label_col), Ok((FrameType::String, _)));
    if string_labels {
        let col = values
            .into_iter()
            .map(|v| Arc::from(Atomic::Double(v).cast(AtomicKind::Integer).map_or_else(|_| v.to_string(), |a| a.lexical())))
            .collect();
        (FrameType::String, Column::String(col))
    } else {
        (FrameType::Double, Column::Double(values))
    }
}

/// Applies `f` to each row in parallel, keeping row order.
pub(crate) fn map_rows<T, F>(m: &Matrix, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    (0..m.rows)
        .into_par_iter()
        .with_min_len(BLOCK_ROWS)
        .map(|i| f(m.row(i)))
        .collect()
}

/// Sums per-block partial results with a fixed pairwise tree, so the
/// floating-point result does not depend on thread count.
pub(crate) fn block_reduce<F>(rows: usize, width: usize, partial: F) -> Vec<f64>
where
    F: Fn(std::ops::Range<usize>, &mut [f64]) + Sync,
{
    let blocks = rows.div_ceil(BLOCK_ROWS);
    let mut sums: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; width];
            partial(b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(rows), &mut acc);
            acc
        })
        .collect();
    if sums.is_empty() {
        return vec![0.0; width];
    }
    while sums.len() > 1 {
        let mut next = Vec::with_capacity(sums.len().div_ceil(2));
        let mut it = sums.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        sums = next;
    }
    sums.pop().expect("one block left")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_reduce_matches_naive_sum() {
        let rows = 5000;
        let out = block_reduce(rows, 1, |r, acc| {
            for i in r {
                acc[0] += i as f64;
            }
        });
        assert_eq!(out[0], (0..rows).map(|i| i as f64).sum::<f64>());
    }
}
