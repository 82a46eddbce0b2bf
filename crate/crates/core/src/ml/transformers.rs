//! Stateless feature transformers.

use std::sync::Arc;

use super::data::feature_matrix;
use super::params::ParamMap;
use crate::error::{bail, Result};
use crate::frame::{vector_column, Column, Frame, FrameType};

pub fn tokenize_text(s: &str) -> Vec<String> {
    s.to_lowercase().split_whitespace().map(str::to_string).collect()
}

pub fn tokenizer(frame: &Frame, params: &ParamMap) -> Result<Frame> {
    let input = params.string("inputCol")?;
    let output = params.string("outputCol")?;
    let (ty, col) = frame.column(input)?;
    let Column::String(values) = &**col else {
        bail!(TypeError, "Tokenizer input column {input:?} has type {ty}, expected String");
    };
    let mut offsets = Vec::with_capacity(values.len() + 1);
    offsets.push(0);
    let mut tokens: Vec<Arc<str>> = Vec::new();
    for v in values {
        tokens.extend(tokenize_text(v).into_iter().map(Arc::from));
        offsets.push(tokens.len());
    }
    let column = Column::Array {
        offsets,
        values: Box::new(Column::String(tokens)),
    };
    frame.add_column(output, FrameType::array(FrameType::String), column)
}

/// Appends the numeric content of one column, row by row, as a dense
/// `n x width` block.
fn numeric_block(name: &str, ty: &FrameType, col: &Column, n: usize) -> Result<(usize, Vec<f64>)> {
    match (ty, col) {
        (t, c) if t.is_numeric_scalar() => Ok((1, (0..n).map(|i| c.as_f64(i).unwrap_or(f64::NAN)).collect())),
        (FrameType::Array(member), Column::Array { offsets, values }) if member.is_numeric_scalar() => {
            let width = if n == 0 { 0 } else { offsets[1] - offsets[0] };
            for i in 0..n {
                let len = offsets[i + 1] - offsets[i];
                if len != width {
                    bail!(RaggedVectors, "row {i} of {name:?} has {len} entries, row 0 has {width}");
                }
            }
            Ok((width, (offsets[0]..offsets[n]).map(|j| values.as_f64(j).unwrap_or(f64::NAN)).collect()))
        }
        (FrameType::Record(fields), Column::Record { fields: cols, .. }) => {
            let parts = fields
                .iter()
                .zip(cols)
                .map(|((field, t), c)| numeric_block(&format!("{name}.{field}"), t, c, n))
                .collect::<Result<Vec<_>>>()?;
            Ok(interleave(&parts, n))
        }
        _ => bail!(NonNumericInput, "column {name:?} has type {ty}, which is not numeric"),
    }
}

fn interleave(parts: &[(usize, Vec<f64>)], n: usize) -> (usize, Vec<f64>) {
    let width: usize = parts.iter().map(|p| p.0).sum();
    let mut out = Vec::with_capacity(width * n);
    for i in 0..n {
        for (w, data) in parts {
            out.extend_from_slice(&data[i * w..(i + 1) * w]);
        }
    }
    (width, out)
}

pub fn vector_assembler(frame: &Frame, params: &ParamMap) -> Result<Frame> {
    let output = params.string("outputCol")?;
    let n = frame.len();
    let parts = params
        .strings("inputCols")?
        .iter()
        .map(|name| {
            let (ty, col) = frame.column(name)?;
            numeric_block(name, ty, col, n)
        })
        .collect::<Result<Vec<_>>>()?;
    let (width, data) = interleave(&parts, n);
    let column = if width == 0 {
        vector_column((0..n).map(|_| &[][..]))
    } else {
        vector_column(data.chunks(width))
    };
    frame.add_column(output, FrameType::array(FrameType::Double), column)
}

pub fn vector_slicer(frame: &Frame, params: &ParamMap) -> Result<Frame> {
    let input = params.string("inputCol")?;
    let output = params.string("outputCol")?;
    let indices = params.ints("indices")?;
    let x = feature_matrix(frame, input)?;
    if let Some(bad) = indices.iter().find(|i| **i < 0 || (x.rows > 0 && **i as usize >= x.cols)) {
        bail!(RangeError, "index {bad} is outside vectors of length {}", x.cols);
    }
    let rows: Vec<Vec<f64>> = (0..x.rows)
        .map(|i| indices.iter().map(|j| x.row(i)[*j as usize]).collect())
        .collect();
    let column = vector_column(rows.iter().map(Vec::as_slice));
    frame.add_column(output, FrameType::array(FrameType::Double), column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize_text("Hi I heard"), vec!["hi", "i", "heard"]);
        assert!(tokenize_text("").is_empty());
        assert_eq!(tokenize_text("  a\tB  "), vec!["a", "b"]);
    }
}
