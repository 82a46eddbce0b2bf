//! Columnar frames: schema-tagged storage for validated homogeneous object
//! sequences, and the operators that work on them.
//!
//! Frames are immutable; every operator returns a new frame that shares
//! untouched columns with its input.

mod column;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{bail, Error, Result};
use crate::item::{value_compare, Atomic, AtomicKind, CmpOp, Item, Object};

pub use column::{vector_column, Column, FrameType};
pub(crate) use column::ColumnBuilder;

/// Rows per parallel work unit. Results are merged in range order, so the
/// value has no effect on output.
pub const BLOCK_ROWS: usize = 1024;

pub type Schema = Vec<(Arc<str>, FrameType)>;

#[derive(Debug, Clone)]
pub struct Frame {
    schema: Schema,
    columns: Vec<Arc<Column>>,
    len: usize,
}

impl Frame {
    pub fn empty(schema: Schema) -> Frame {
        let columns = schema
            .iter()
            .map(|(_, t)| Arc::new(ColumnBuilder::new(t).finish()))
            .collect();
        Frame { schema, columns, len: 0 }
    }

    /// Assembles a frame from prebuilt columns.
    pub fn from_columns(schema: Schema, columns: Vec<Arc<Column>>) -> Result<Frame> {
        if schema.len() != columns.len() {
            bail!(SchemaMismatch, "{} schema entries for {} columns", schema.len(), columns.len());
        }
        let len = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != len) {
            bail!(SchemaMismatch, "columns have different lengths");
        }
        check_unique(&schema)?;
        Ok(Frame { schema, columns, len })
    }

    /// Columnar transpose of already validated rows.
    pub fn from_items(rows: &[Item], schema: Schema) -> Result<Frame> {
        check_unique(&schema)?;
        let mut builders: Vec<ColumnBuilder> =
            schema.iter().map(|(_, t)| ColumnBuilder::new(t)).collect();
        for (i, row) in rows.iter().enumerate() {
            let Some(obj) = row.as_object() else {
                bail!(SchemaMismatch, "row {i}: expected object, got {}", row.type_name());
            };
            if obj.len() != schema.len() {
                bail!(SchemaMismatch, "row {i}: expected {} fields, got {}", schema.len(), obj.len());
            }
            for ((name, _), builder) in schema.iter().zip(builders.iter_mut()) {
                let Some(value) = obj.get(name) else {
                    bail!(SchemaMismatch, "row {i}: missing field {name:?}");
                };
                builder
                    .push(value)
                    .map_err(|e| Error::new(e.code, format!("row {i}, field {name:?}: {}", e.message)))?;
            }
        }
        let columns = builders.into_iter().map(|b| Arc::new(b.finish())).collect();
        Ok(Frame {
            schema,
            columns,
            len: rows.len(),
        })
    }

    /// Builds a frame whose schema is read off the first row. Used when a
    /// frame-only operator receives a plain item sequence.
    pub fn infer_from_items(rows: &[Item]) -> Result<Frame> {
        let schema = match rows.first() {
            None => Vec::new(),
            Some(Item::Object(obj)) => obj
                .iter()
                .map(|(k, v)| Ok((Arc::from(k), infer_type(v)?)))
                .collect::<Result<_>>()?,
            Some(other) => bail!(NonObjectRow, "row 0 is {}, not an object", other.type_name()),
        };
        Frame::from_items(rows, schema)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Arc<Column>] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.schema.iter().map(|(n, _)| &**n)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|(n, _)| &**n == name)
    }

    pub fn column(&self, name: &str) -> Result<(&FrameType, &Arc<Column>)> {
        match self.position(name) {
            Some(i) => Ok((&self.schema[i].1, &self.columns[i])),
            None => bail!(UnknownColumn, "no column {name:?} in frame"),
        }
    }

    /// Row `i` as an object with fields in schema order.
    pub fn row(&self, i: usize) -> Item {
        let mut obj = Object::with_capacity(self.schema.len());
        for ((name, _), col) in self.schema.iter().zip(&self.columns) {
            obj.insert(name.clone(), col.item_at(i)).expect("schema names are unique");
        }
        Item::object(obj)
    }

    pub fn into_rows(frame: Arc<Frame>) -> impl Iterator<Item = Item> + Send {
        (0..frame.len).map(move |i| frame.row(i))
    }

    pub fn rows(&self) -> Vec<Item> {
        (0..self.len).map(|i| self.row(i)).collect()
    }

    pub fn filter_mask(&self, mask: &[bool]) -> Frame {
        assert_eq!(mask.len(), self.len, "mask length must equal row count");
        let len = mask.iter().filter(|m| **m).count();
        if len == self.len {
            return self.clone();
        }
        let columns = self
            .columns
            .par_iter()
            .map(|c| Arc::new(c.filter(mask)))
            .collect();
        Frame {
            schema: self.schema.clone(),
            columns,
            len,
        }
    }

    /// Keeps the rows for which `pred` holds. Rows are evaluated in
    /// parallel; the reported error is the one at the lowest row index.
    pub fn filter<F>(&self, pred: F) -> Result<Frame>
    where
        F: Fn(Item) -> Result<bool> + Sync,
    {
        let results: Vec<Result<bool>> = (0..self.len)
            .into_par_iter()
            .with_min_len(BLOCK_ROWS)
            .map(|i| pred(self.row(i)))
            .collect();
        let mut mask = Vec::with_capacity(self.len);
        for (i, r) in results.into_iter().enumerate() {
            mask.push(r.map_err(|e| row_error(i, e))?);
        }
        Ok(self.filter_mask(&mask))
    }

    /// Keeps rows where `column op value` holds, comparing with value
    /// comparison semantics. Rows whose cell is not atomic are dropped.
    pub fn compare_scalar(&self, name: &str, op: CmpOp, value: &Atomic) -> Result<Frame> {
        let (_, col) = self.column(name)?;
        let mask = compare_kernel(self.len, |i| col.atomic_at(i), |_| Some(value.clone()), op)?;
        Ok(self.filter_mask(&mask))
    }

    /// Keeps rows where `left op right` holds for two columns.
    pub fn compare_columns(&self, left: &str, op: CmpOp, right: &str) -> Result<Frame> {
        let (_, l) = self.column(left)?;
        let (_, r) = self.column(right)?;
        let mask = compare_kernel(self.len, |i| l.atomic_at(i), |i| r.atomic_at(i), op)?;
        Ok(self.filter_mask(&mask))
    }

    pub fn project(&self, names: &[&str]) -> Result<Frame> {
        let mut schema = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let Some(i) = self.position(name) else {
                bail!(UnknownColumn, "no column {name:?} in frame");
            };
            schema.push(self.schema[i].clone());
            columns.push(self.columns[i].clone());
        }
        check_unique(&schema)?;
        Ok(Frame {
            schema,
            columns,
            len: self.len,
        })
    }

    /// Appends a prebuilt column at the end of the schema.
    pub fn add_column(&self, name: &str, ty: FrameType, column: Column) -> Result<Frame> {
        if self.position(name).is_some() {
            bail!(DuplicateColumn, "column {name:?} already exists");
        }
        if column.len() != self.len {
            bail!(SchemaMismatch, "new column has {} rows, frame has {}", column.len(), self.len);
        }
        let mut out = self.clone();
        out.schema.push((Arc::from(name), ty));
        out.columns.push(Arc::new(column));
        Ok(out)
    }

    /// Appends a column computed row by row.
    pub fn add_column_with<F>(&self, name: &str, ty: FrameType, generator: F) -> Result<Frame>
    where
        F: Fn(Item) -> Result<Item> + Sync,
    {
        if self.position(name).is_some() {
            bail!(DuplicateColumn, "column {name:?} already exists");
        }
        let values: Vec<Result<Item>> = (0..self.len)
            .into_par_iter()
            .with_min_len(BLOCK_ROWS)
            .map(|i| generator(self.row(i)))
            .collect();
        let mut builder = ColumnBuilder::new(&ty);
        for (i, v) in values.into_iter().enumerate() {
            builder.push(&v.map_err(|e| row_error(i, e))?).map_err(|e| row_error(i, e))?;
        }
        self.add_column(name, ty, builder.finish())
    }
}

fn row_error(i: usize, e: Error) -> Error {
    Error {
        message: format!("row {i}: {}", e.message),
        ..e
    }
}

fn check_unique(schema: &Schema) -> Result<()> {
    for (i, (name, _)) in schema.iter().enumerate() {
        if schema[..i].iter().any(|(n, _)| n == name) {
            bail!(DuplicateColumn, "column {name:?} appears twice");
        }
    }
    Ok(())
}

fn compare_kernel<L, R>(len: usize, left: L, right: R, op: CmpOp) -> Result<Vec<bool>>
where
    L: Fn(usize) -> Option<Atomic> + Sync,
    R: Fn(usize) -> Option<Atomic> + Sync,
{
    let results: Vec<Result<bool>> = (0..len)
        .into_par_iter()
        .with_min_len(BLOCK_ROWS)
        .map(|i| match (left(i), right(i)) {
            (Some(a), Some(b)) => value_compare(op, &a, &b),
            _ => Ok(false),
        })
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| row_error(i, e)))
        .collect()
}

/// Frame type for an atomic kind. Arbitrary-precision integers have no
/// dedicated column type and are stored as decimals.
pub fn frame_type_of_kind(kind: AtomicKind) -> FrameType {
    match kind {
        AtomicKind::Byte => FrameType::Byte,
        AtomicKind::Short => FrameType::Short,
        AtomicKind::Int => FrameType::Integer,
        AtomicKind::Long => FrameType::Long,
        AtomicKind::Boolean => FrameType::Boolean,
        AtomicKind::Double => FrameType::Double,
        AtomicKind::Float => FrameType::Float,
        AtomicKind::Decimal | AtomicKind::Integer => FrameType::Decimal,
        AtomicKind::String => FrameType::String,
        AtomicKind::Null => FrameType::Null,
        AtomicKind::Date => FrameType::Date,
        AtomicKind::DateTime => FrameType::Timestamp,
        AtomicKind::HexBinary => FrameType::Binary,
    }
}

fn infer_type(item: &Item) -> Result<FrameType> {
    Ok(match item {
        Item::Atomic(a) => frame_type_of_kind(a.kind()),
        Item::Array(members) => match members.first() {
            Some(m) => FrameType::array(infer_type(m)?),
            None => FrameType::array(FrameType::Double),
        },
        Item::Object(obj) => FrameType::Record(
            obj.iter()
                .map(|(k, v)| Ok((Arc::from(k), infer_type(v)?)))
                .collect::<Result<_>>()?,
        ),
        Item::Function(_) => bail!(SchemaMismatch, "function items cannot be stored in a frame"),
    })
}
