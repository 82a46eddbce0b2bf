//! The item/sequence data model.
//!
//! Every expression evaluates to a [`Sequence`] of [`Item`]s. An item is an
//! atomic value, an object, an array, or a function item.

mod atomic;
mod function;
mod json;
mod ops;
mod sequence;

use std::fmt;
use std::sync::Arc;

use bigdecimal::BigDecimal;
use indexmap::IndexMap;
use num_bigint::BigInt;

use crate::error::{bail, Result};

pub use atomic::{Atomic, AtomicKind};
pub(crate) use atomic::Num;
pub(crate) use ops::negate;
pub use function::{
    CallContext, FunctionBody, FunctionItem, FunctionSignature, ItemType, NativeFunction,
    Occurrence, SequenceType,
};
pub use json::{canonical_serialize, parse_json};
pub use ops::{
    arithmetic, atomic_order, deep_equal, effective_boolean_value, ebv_items, value_compare,
    ArithOp, CmpOp,
};
pub use sequence::{materialize, ItemIter, Sequence, Value};

/// Object with unique keys kept in construction order.
#[derive(Clone, Default)]
pub struct Object {
    entries: IndexMap<Arc<str>, Item>,
}

impl Object {
    pub fn new() -> Self {
        Object::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Object {
            entries: IndexMap::with_capacity(n),
        }
    }

    /// Builds an object, rejecting duplicate keys.
    pub fn from_pairs<K: Into<Arc<str>>>(pairs: impl IntoIterator<Item = (K, Item)>) -> Result<Self> {
        let mut obj = Object::new();
        for (k, v) in pairs {
            obj.insert(k, v)?;
        }
        Ok(obj)
    }

    pub fn insert(&mut self, key: impl Into<Arc<str>>, value: Item) -> Result<()> {
        let key = key.into();
        if self.entries.contains_key(&key) {
            bail!(DuplicateKey, "duplicate object key {key:?}");
        }
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Item> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Item)> {
        self.entries.iter().map(|(k, v)| (&**k, v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| &**k)
    }
}

impl fmt::Debug for Object {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

#[derive(Clone)]
pub enum Item {
    Atomic(Atomic),
    Object(Arc<Object>),
    Array(Arc<Vec<Item>>),
    Function(Arc<FunctionItem>),
}

impl Item {
    pub fn string(s: impl Into<Arc<str>>) -> Item {
        Item::Atomic(Atomic::String(s.into()))
    }

    pub fn integer(v: i64) -> Item {
        Item::Atomic(Atomic::Integer(BigInt::from(v)))
    }

    pub fn big_integer(v: BigInt) -> Item {
        Item::Atomic(Atomic::Integer(v))
    }

    pub fn decimal(v: BigDecimal) -> Item {
        Item::Atomic(Atomic::Decimal(v))
    }

    pub fn double(v: f64) -> Item {
        Item::Atomic(Atomic::Double(v))
    }

    pub fn boolean(v: bool) -> Item {
        Item::Atomic(Atomic::Boolean(v))
    }

    pub fn null() -> Item {
        Item::Atomic(Atomic::Null)
    }

    pub fn object(obj: Object) -> Item {
        Item::Object(Arc::new(obj))
    }

    pub fn array(members: Vec<Item>) -> Item {
        Item::Array(Arc::new(members))
    }

    pub fn function(f: FunctionItem) -> Item {
        Item::Function(Arc::new(f))
    }

    pub fn as_atomic(&self) -> Option<&Atomic> {
        match self {
            Item::Atomic(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_object(&self) -> Option<&Object> {
        match self {
            Item::Object(o) => Some(o),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[Item]> {
        match self {
            Item::Array(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_function(&self) -> Option<&Arc<FunctionItem>> {
        match self {
            Item::Function(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        self.as_atomic().and_then(Atomic::as_str)
    }

    /// A short type name used in error messages.
    pub fn type_name(&self) -> &'static str {
        match self {
            Item::Atomic(a) => a.kind().name(),
            Item::Object(_) => "object",
            Item::Array(_) => "array",
            Item::Function(_) => "function",
        }
    }

    pub fn contains_function(&self) -> bool {
        match self {
            Item::Atomic(_) => false,
            Item::Function(_) => true,
            Item::Object(o) => o.iter().any(|(_, v)| v.contains_function()),
            Item::Array(a) => a.iter().any(Item::contains_function),
        }
    }
}

impl From<Atomic> for Item {
    fn from(a: Atomic) -> Self {
        Item::Atomic(a)
    }
}

impl fmt::Debug for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Function(func) => write!(f, "{func:?}"),
            other => match canonical_serialize(other) {
                Ok(s) => f.write_str(&s),
                Err(_) => f.write_str("<item>"),
            },
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
