use std::fmt;
use std::sync::Arc;

use bigdecimal::BigDecimal;
use chrono::{NaiveDate, NaiveDateTime};

use crate::error::{bail, Result};
use crate::item::{Atomic, Item, Object};

/// Column type in frame vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FrameType {
    Byte,
    Short,
    Integer,
    Long,
    Boolean,
    Double,
    Float,
    Decimal,
    String,
    Null,
    Date,
    Timestamp,
    Binary,
    Array(Box<FrameType>),
    Record(Vec<(Arc<str>, FrameType)>),
}

impl FrameType {
    pub fn array(member: FrameType) -> FrameType {
        FrameType::Array(Box::new(member))
    }

    pub fn is_numeric_scalar(&self) -> bool {
        matches!(
            self,
            FrameType::Byte
                | FrameType::Short
                | FrameType::Integer
                | FrameType::Long
                | FrameType::Double
                | FrameType::Float
                | FrameType::Decimal
        )
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, FrameType::Array(_) | FrameType::Record(_))
    }
}

impl fmt::Display for FrameType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameType::Array(m) => write!(f, "Array({m})"),
            FrameType::Record(fields) => {
                f.write_str("Record(")?;
                for (i, (name, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {t}")?;
                }
                f.write_str(")")
            }
            other => write!(f, "{other:?}"),
        }
    }
}

/// Contiguous typed storage for one column.
///
/// Arrays use an offsets vector into a flat member column, so an
/// `Array(Double)` column is a dense vector buffer.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Byte(Vec<i8>),
    Short(Vec<i16>),
    Integer(Vec<i32>),
    Long(Vec<i64>),
    Boolean(Vec<bool>),
    Double(Vec<f64>),
    Float(Vec<f32>),
    Decimal(Vec<BigDecimal>),
    String(Vec<Arc<str>>),
    Null(usize),
    Date(Vec<NaiveDate>),
    Timestamp(Vec<NaiveDateTime>),
    Binary(Vec<Arc<[u8]>>),
    Array {
        offsets: Vec<usize>,
        values: Box<Column>,
    },
    Record {
        len: usize,
        names: Arc<[Arc<str>]>,
        fields: Vec<Column>,
    },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Byte(v) => v.len(),
            Column::Short(v) => v.len(),
            Column::Integer(v) => v.len(),
            Column::Long(v) => v.len(),
            Column::Boolean(v) => v.len(),
            Column::Double(v) => v.len(),
            Column::Float(v) => v.len(),
            Column::Decimal(v) => v.len(),
            Column::String(v) => v.len(),
            Column::Null(n) => *n,
            Column::Date(v) => v.len(),
            Column::Timestamp(v) => v.len(),
            Column::Binary(v) => v.len(),
            Column::Array { offsets, .. } => offsets.len() - 1,
            Column::Record { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scalar value at row `i`, or `None` for array and record columns.
    pub fn atomic_at(&self, i: usize) -> Option<Atomic> {
        Some(match self {
            Column::Byte(v) => Atomic::Byte(v[i]),
            Column::Short(v) => Atomic::Short(v[i]),
            Column::Integer(v) => Atomic::Int(v[i]),
            Column::Long(v) => Atomic::Long(v[i]),
            Column::Boolean(v) => Atomic::Boolean(v[i]),
            Column::Double(v) => Atomic::Double(v[i]),
            Column::Float(v) => Atomic::Float(v[i]),
            Column::Decimal(v) => Atomic::Decimal(v[i].clone()),
            Column::String(v) => Atomic::String(v[i].clone()),
            Column::Null(_) => Atomic::Null,
            Column::Date(v) => Atomic::Date(v[i]),
            Column::Timestamp(v) => Atomic::DateTime(v[i]),
            Column::Binary(v) => Atomic::HexBinary(v[i].clone()),
            Column::Array { .. } | Column::Record { .. } => return None,
        })
    }

    pub fn item_at(&self, i: usize) -> Item {
        match self {
            Column::Array { offsets, values } => {
                Item::array((offsets[i]..offsets[i + 1]).map(|j| values.item_at(j)).collect())
            }
            Column::Record { names, fields, .. } => {
                let mut obj = Object::with_capacity(names.len());
                for (name, col) in names.iter().zip(fields) {
                    obj.insert(name.clone(), col.item_at(i)).expect("record names are unique");
                }
                Item::object(obj)
            }
            scalar => Item::Atomic(scalar.atomic_at(i).expect("scalar column")),
        }
    }

    pub fn as_f64(&self, i: usize) -> Option<f64> {
        match self {
            Column::Double(v) => Some(v[i]),
            other => other.atomic_at(i)?.to_f64(),
        }
    }

    /// Members of the array at row `i` when the column is `Array(Double)`.
    pub fn f64_slice(&self, i: usize) -> Option<&[f64]> {
        match self {
            Column::Array { offsets, values } => match &**values {
                Column::Double(v) => Some(&v[offsets[i]..offsets[i + 1]]),
                _ => None,
            },
            _ => None,
        }
    }

    /// Keeps rows whose mask entry is true.
    pub fn filter(&self, mask: &[bool]) -> Column {
        fn pick<T: Clone>(v: &[T], mask: &[bool]) -> Vec<T> {
            v.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| x.clone()).collect()
        }
        match self {
            Column::Byte(v) => Column::Byte(pick(v, mask)),
            Column::Short(v) => Column::Short(pick(v, mask)),
            Column::Integer(v) => Column::Integer(pick(v, mask)),
            Column::Long(v) => Column::Long(pick(v, mask)),
            Column::Boolean(v) => Column::Boolean(pick(v, mask)),
            Column::Double(v) => Column::Double(pick(v, mask)),
            Column::Float(v) => Column::Float(pick(v, mask)),
            Column::Decimal(v) => Column::Decimal(pick(v, mask)),
            Column::String(v) => Column::String(pick(v, mask)),
            Column::Null(_) => Column::Null(mask.iter().filter(|m| **m).count()),
            Column::Date(v) => Column::Date(pick(v, mask)),
            Column::Timestamp(v) => Column::Timestamp(pick(v, mask)),
            Column::Binary(v) => Column::Binary(pick(v, mask)),
            Column::Array { offsets, values } => {
                let mut new_offsets = vec![0];
                let mut inner = vec![false; values.len()];
                for (i, &keep) in mask.iter().enumerate() {
                    if keep {
                        inner[offsets[i]..offsets[i + 1]].iter_mut().for_each(|m| *m = true);
                        let last = *new_offsets.last().expect("nonempty");
                        new_offsets.push(last + offsets[i + 1] - offsets[i]);
                    }
                }
                Column::Array {
                    offsets: new_offsets,
                    values: Box::new(values.filter(&inner)),
                }
            }
            Column::Record { names, fields, .. } => Column::Record {
                len: mask.iter().filter(|m| **m).count(),
                names: names.clone(),
                fields: fields.iter().map(|c| c.filter(mask)).collect(),
            },
        }
    }
}

/// Accumulates items of one frame type into a column.
pub(crate) enum ColumnBuilder {
    Scalar(FrameType, Column),
    Array {
        offsets: Vec<usize>,
        values: Box<ColumnBuilder>,
    },
    Record {
        len: usize,
        names: Arc<[Arc<str>]>,
        fields: Vec<ColumnBuilder>,
    },
}

impl ColumnBuilder {
    pub(crate) fn new(ty: &FrameType) -> ColumnBuilder {
        let scalar = |c: Column| ColumnBuilder::Scalar(ty.clone(), c);
        match ty {
            FrameType::Byte => scalar(Column::Byte(Vec::new())),
            FrameType::Short => scalar(Column::Short(Vec::new())),
            FrameType::Integer => scalar(Column::Integer(Vec::new())),
            FrameType::Long => scalar(Column::Long(Vec::new())),
            FrameType::Boolean => scalar(Column::Boolean(Vec::new())),
            FrameType::Double => scalar(Column::Double(Vec::new())),
            FrameType::Float => scalar(Column::Float(Vec::new())),
            FrameType::Decimal => scalar(Column::Decimal(Vec::new())),
            FrameType::String => scalar(Column::String(Vec::new())),
            FrameType::Null => scalar(Column::Null(0)),
            FrameType::Date => scalar(Column::Date(Vec::new())),
            FrameType::Timestamp => scalar(Column::Timestamp(Vec::new())),
            FrameType::Binary => scalar(Column::Binary(Vec::new())),
            FrameType::Array(member) => ColumnBuilder::Array {
                offsets: vec![0],
                values: Box::new(ColumnBuilder::new(member)),
            },
            FrameType::Record(fields) => ColumnBuilder::Record {
                len: 0,
                names: fields.iter().map(|(n, _)| n.clone()).collect(),
                fields: fields.iter().map(|(_, t)| ColumnBuilder::new(t)).collect(),
            },
        }
    }

    pub(crate) fn push(&mut self, item: &Item) -> Result<()> {
        match self {
            ColumnBuilder::Scalar(ty, col) => {
                let Item::Atomic(a) = item else {
                    bail!(SchemaMismatch, "expected {ty} value, got {}", item.type_name());
                };
                let ok = match (col, a) {
                    (Column::Byte(v), Atomic::Byte(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Short(v), Atomic::Short(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Integer(v), Atomic::Int(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Long(v), Atomic::Long(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Boolean(v), Atomic::Boolean(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Double(v), Atomic::Double(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Float(v), Atomic::Float(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Decimal(v), Atomic::Decimal(x)) => {
                        v.push(x.clone());
                        true
                    }
                    // arbitrary-precision integers are stored as decimals
                    (Column::Decimal(v), Atomic::Integer(x)) => {
                        v.push(BigDecimal::from(x.clone()));
                        true
                    }
                    (Column::String(v), Atomic::String(x)) => {
                        v.push(x.clone());
                        true
                    }
                    (Column::Null(n), Atomic::Null) => {
                        *n += 1;
                        true
                    }
                    (Column::Date(v), Atomic::Date(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Timestamp(v), Atomic::DateTime(x)) => {
                        v.push(*x);
                        true
                    }
                    (Column::Binary(v), Atomic::HexBinary(x)) => {
                        v.push(x.clone());
                        true
                    }
                    _ => false,
                };
                if !ok {
                    bail!(SchemaMismatch, "expected {ty} value, got {}", a.kind());
                }
            }
            ColumnBuilder::Array { offsets, values } => {
                let Some(members) = item.as_array() else {
                    bail!(SchemaMismatch, "expected array, got {}", item.type_name());
                };
                for m in members {
                    values.push(m)?;
                }
                let last = *offsets.last().expect("nonempty");
                offsets.push(last + members.len());
            }
            ColumnBuilder::Record { len, names, fields } => {
                let Some(obj) = item.as_object() else {
                    bail!(SchemaMismatch, "expected object, got {}", item.type_name());
                };
                if obj.len() != names.len() {
                    bail!(
                        SchemaMismatch,
                        "expected object with {} fields, got {}",
                        names.len(),
                        obj.len()
                    );
                }
                for (name, builder) in names.iter().zip(fields.iter_mut()) {
                    match obj.get(name) {
                        Some(v) => builder.push(v)?,
                        None => bail!(SchemaMismatch, "missing field {name:?}"),
                    }
                }
                *len += 1;
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Column {
        match self {
            ColumnBuilder::Scalar(_, col) => col,
            ColumnBuilder::Array { offsets, values } => Column::Array {
                offsets,
                values: Box::new(values.finish()),
            },
            ColumnBuilder::Record { len, names, fields } => Column::Record {
                len,
                names,
                fields: fields.into_iter().map(ColumnBuilder::finish).collect(),
            },
        }
    }
}

/// Builds an `Array(Double)` column from dense rows.
pub fn vector_column<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Column {
    let mut offsets = vec![0];
    let mut flat = Vec::new();
    for row in rows {
        flat.extend_from_slice(row);
        offsets.push(flat.len());
    }
    Column::Array {
        offsets,
        values: Box::new(Column::Double(flat)),
    }
}
