use std::fmt;
use std::sync::Arc;

use super::Item;
use crate::error::{bail, Result};
use crate::frame::Frame;

pub type ItemIter = Box<dyn Iterator<Item = Result<Item>> + Send>;

/// A logical sequence of items in one of three physical representations.
///
/// A `Frame` is observationally the stream of its row objects; the empty
/// sequence is an empty `Stream`.
pub enum Sequence {
    Single(Item),
    Stream(ItemIter),
    Frame(Arc<Frame>),
}

impl Sequence {
    pub fn empty() -> Sequence {
        Sequence::Stream(Box::new(std::iter::empty()))
    }

    pub fn from_items(items: Vec<Item>) -> Sequence {
        if items.len() == 1 {
            return Sequence::Single(items.into_iter().next().expect("one item"));
        }
        Sequence::Stream(Box::new(items.into_iter().map(Ok)))
    }

    pub fn from_shared(items: Arc<[Item]>) -> Sequence {
        if items.len() == 1 {
            return Sequence::Single(items[0].clone());
        }
        Sequence::Stream(Box::new((0..items.len()).map(move |i| Ok(items[i].clone()))))
    }

    pub fn from_iter<I>(iter: I) -> Sequence
    where
        I: Iterator<Item = Result<Item>> + Send + 'static,
    {
        Sequence::Stream(Box::new(iter))
    }

    pub fn optional(item: Option<Item>) -> Sequence {
        match item {
            Some(i) => Sequence::Single(i),
            None => Sequence::empty(),
        }
    }

    pub fn is_frame(&self) -> bool {
        matches!(self, Sequence::Frame(_))
    }

    pub fn representation(&self) -> &'static str {
        match self {
            Sequence::Single(_) => "single",
            Sequence::Stream(_) => "stream",
            Sequence::Frame(_) => "frame",
        }
    }

    /// Pull iterator over the items; frames are adapted row by row.
    pub fn into_iter(self) -> ItemIter {
        match self {
            Sequence::Single(item) => Box::new(std::iter::once(Ok(item))),
            Sequence::Stream(it) => it,
            Sequence::Frame(frame) => Box::new(Frame::into_rows(frame).map(Ok)),
        }
    }

    /// Collects the items; fails once more than `cap` items are produced.
    pub fn materialize(self, cap: usize) -> Result<Vec<Item>> {
        materialize(self, cap)
    }

    /// Collects the items with no cap. Only for sequences known to be small.
    pub fn collect_all(self) -> Result<Vec<Item>> {
        self.into_iter().collect()
    }

    /// Turns the sequence into a re-iterable value. Frames stay columnar and
    /// are not counted against the cap.
    pub fn bind(self, cap: usize) -> Result<Value> {
        match self {
            Sequence::Frame(f) => Ok(Value::Frame(f)),
            Sequence::Single(item) => Ok(Value::Items(Arc::from(vec![item]))),
            other => Ok(Value::Items(materialize(other, cap)?.into())),
        }
    }

    /// Returns the first item and drops the rest.
    pub fn first(self) -> Result<Option<Item>> {
        match self {
            Sequence::Single(item) => Ok(Some(item)),
            Sequence::Frame(f) => Ok((!f.is_empty()).then(|| f.row(0))),
            Sequence::Stream(mut it) => it.next().transpose(),
        }
    }

    /// At most one item, or `None` for the empty sequence. More items is an
    /// error built by `too_many`.
    pub fn at_most_one(self, what: &str) -> Result<Option<Item>> {
        match self {
            Sequence::Single(item) => Ok(Some(item)),
            other => {
                let mut it = other.into_iter();
                let first = it.next().transpose()?;
                if first.is_some() && it.next().transpose()?.is_some() {
                    bail!(TypeError, "{what} expects at most one item, got a longer sequence");
                }
                Ok(first)
            }
        }
    }

    pub fn exactly_one(self, what: &str) -> Result<Item> {
        match self.at_most_one(what)? {
            Some(item) => Ok(item),
            None => bail!(TypeError, "{what} expects exactly one item, got the empty sequence"),
        }
    }

    /// Number of items. Frames answer from their row count.
    pub fn count(self) -> Result<usize> {
        match self {
            Sequence::Single(_) => Ok(1),
            Sequence::Frame(f) => Ok(f.len()),
            Sequence::Stream(it) => {
                let mut n = 0;
                for item in it {
                    item?;
                    n += 1;
                }
                Ok(n)
            }
        }
    }
}

impl From<Value> for Sequence {
    fn from(v: Value) -> Self {
        match v {
            Value::Items(items) => Sequence::from_shared(items),
            Value::Frame(f) => Sequence::Frame(f),
        }
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Single(i) => write!(f, "Single({i:?})"),
            Sequence::Stream(_) => f.write_str("Stream(..)"),
            Sequence::Frame(fr) => write!(f, "Frame({} rows)", fr.len()),
        }
    }
}

pub fn materialize(seq: Sequence, cap: usize) -> Result<Vec<Item>> {
    assert!(cap > 0, "materialization cap must be positive");
    let mut out = Vec::new();
    for item in seq.into_iter() {
        if out.len() == cap {
            bail!(
                MaterializationCapExceeded,
                "sequence exceeds the materialization cap of {cap} items"
            );
        }
        out.push(item?);
    }
    Ok(out)
}

/// A materialized, re-iterable sequence bound to a variable or argument.
#[derive(Clone)]
pub enum Value {
    Items(Arc<[Item]>),
    Frame(Arc<Frame>),
}

impl Value {
    pub fn empty() -> Value {
        Value::Items(Arc::from(Vec::new()))
    }

    pub fn single(item: Item) -> Value {
        Value::Items(Arc::from(vec![item]))
    }

    pub fn from_items(items: Vec<Item>) -> Value {
        Value::Items(items.into())
    }

    pub fn len(&self) -> usize {
        match self {
            Value::Items(i) => i.len(),
            Value::Frame(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_frame(&self) -> Option<&Arc<Frame>> {
        match self {
            Value::Frame(f) => Some(f),
            Value::Items(_) => None,
        }
    }

    pub fn as_single(&self) -> Option<&Item> {
        match self {
            Value::Items(items) if items.len() == 1 => Some(&items[0]),
            _ => None,
        }
    }

    pub fn to_sequence(&self) -> Sequence {
        Sequence::from(self.clone())
    }

    /// All items; frame rows are converted to objects.
    pub fn items(&self) -> Vec<Item> {
        match self {
            Value::Items(i) => i.to_vec(),
            Value::Frame(f) => Frame::into_rows(f.clone()).collect(),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Items(i) => f.debug_list().entries(i.iter()).finish(),
            Value::Frame(fr) => write!(f, "Frame({} rows)", fr.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorCode;

    fn range(n: i64) -> Sequence {
        Sequence::from_iter((1..=n).map(|i| Ok(Item::integer(i))))
    }

    #[test]
    fn materialize_under_cap() {
        let items = range(3).materialize(10).unwrap();
        assert_eq!(items.len(), 3);
    }

    #[test]
    fn materialize_over_cap() {
        let err = range(100).materialize(10).unwrap_err();
        assert_eq!(err.code, ErrorCode::MaterializationCapExceeded);
    }

    #[test]
    fn exact_cap_is_fine() {
        assert_eq!(range(10).materialize(10).unwrap().len(), 10);
    }
}
