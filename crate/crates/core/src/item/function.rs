use std::any::Any;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use super::{AtomicKind, Item, Sequence, Value};
use crate::error::{bail, Result};
use crate::runtime::{ClosureBody, ModePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occurrence {
    One,
    Optional,
    ZeroOrMore,
    OneOrMore,
}

impl Occurrence {
    pub fn suffix(self) -> &'static str {
        match self {
            Occurrence::One => "",
            Occurrence::Optional => "?",
            Occurrence::ZeroOrMore => "*",
            Occurrence::OneOrMore => "+",
        }
    }

    pub fn allows(self, count: usize) -> bool {
        match self {
            Occurrence::One => count == 1,
            Occurrence::Optional => count <= 1,
            Occurrence::ZeroOrMore => true,
            Occurrence::OneOrMore => count >= 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ItemType {
    Item,
    Object,
    Array,
    AnyAtomic,
    Atomic(AtomicKind),
    /// `None` is the wildcard `function(*)`.
    Function(Option<Box<FunctionSignature>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceType {
    pub item: ItemType,
    pub occurrence: Occurrence,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionSignature {
    pub params: Vec<SequenceType>,
    pub ret: SequenceType,
}

impl SequenceType {
    pub fn new(item: ItemType, occurrence: Occurrence) -> Self {
        SequenceType { item, occurrence }
    }

    pub fn any() -> Self {
        SequenceType::new(ItemType::Item, Occurrence::ZeroOrMore)
    }

    pub fn one(item: ItemType) -> Self {
        SequenceType::new(item, Occurrence::One)
    }

    pub fn objects() -> Self {
        SequenceType::new(ItemType::Object, Occurrence::ZeroOrMore)
    }

    pub fn function(sig: FunctionSignature) -> Self {
        SequenceType::one(ItemType::Function(Some(Box::new(sig))))
    }

    /// The signature of the single function item this type describes, if any.
    pub fn function_signature(&self) -> Option<&FunctionSignature> {
        match (&self.item, self.occurrence) {
            (ItemType::Function(Some(sig)), Occurrence::One) => Some(sig),
            _ => None,
        }
    }

    pub fn matches_item(&self, item: &Item) -> bool {
        self.item.matches(item)
    }

    pub fn matches_value(&self, value: &Value) -> bool {
        match value {
            Value::Frame(f) => {
                self.occurrence.allows(f.len())
                    && matches!(self.item, ItemType::Item | ItemType::Object)
            }
            Value::Items(items) => {
                self.occurrence.allows(items.len()) && items.iter().all(|i| self.item.matches(i))
            }
        }
    }
}

impl ItemType {
    pub fn matches(&self, item: &Item) -> bool {
        match (self, item) {
            (ItemType::Item, _) => true,
            (ItemType::Object, Item::Object(_)) => true,
            (ItemType::Array, Item::Array(_)) => true,
            (ItemType::AnyAtomic, Item::Atomic(_)) => true,
            (ItemType::Atomic(k), Item::Atomic(a)) => kind_accepts(*k, a.kind()),
            (ItemType::Function(None), Item::Function(_)) => true,
            (ItemType::Function(Some(sig)), Item::Function(f)) => f.arity() == sig.params.len(),
            _ => false,
        }
    }
}

/// Subtype relation among atomic kinds, with numeric promotion to
/// `double`/`float`.
fn kind_accepts(declared: AtomicKind, actual: AtomicKind) -> bool {
    use AtomicKind::*;
    if declared == actual {
        return true;
    }
    match declared {
        Double | Float => actual.is_numeric(),
        Decimal => actual.is_integer_family(),
        Integer => matches!(actual, Long | Int | Short | Byte),
        Long => matches!(actual, Int | Short | Byte),
        Int => matches!(actual, Short | Byte),
        Short => actual == Byte,
        _ => false,
    }
}

impl FunctionSignature {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// `function(object*, object) as object*`
    pub fn transformer() -> Self {
        FunctionSignature {
            params: vec![SequenceType::objects(), SequenceType::one(ItemType::Object)],
            ret: SequenceType::objects(),
        }
    }

    /// `function(object*, object) as function(object*, object) as object*`
    pub fn estimator() -> Self {
        FunctionSignature {
            params: vec![SequenceType::objects(), SequenceType::one(ItemType::Object)],
            ret: SequenceType::function(FunctionSignature::transformer()),
        }
    }

    pub fn is_transformer_shaped(&self) -> bool {
        self.arity() == 2 && self.ret.function_signature().is_none()
    }

    pub fn is_estimator_shaped(&self) -> bool {
        self.arity() == 2
            && self
                .ret
                .function_signature()
                .is_some_and(FunctionSignature::is_transformer_shaped)
    }
}

impl fmt::Display for ItemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ItemType::Item => f.write_str("item"),
            ItemType::Object => f.write_str("object"),
            ItemType::Array => f.write_str("array"),
            ItemType::AnyAtomic => f.write_str("atomic"),
            ItemType::Atomic(k) => f.write_str(k.name()),
            ItemType::Function(None) => f.write_str("function(*)"),
            ItemType::Function(Some(sig)) => write!(f, "{sig}"),
        }
    }
}

impl fmt::Display for SequenceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.item, self.occurrence.suffix())
    }
}

impl fmt::Display for FunctionSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("function(")?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ") as {}", self.ret)
    }
}

/// Execution settings handed to function bodies.
#[derive(Debug, Clone)]
pub struct CallContext {
    pub policy: ModePolicy,
    pub cap: usize,
    pub base_dir: PathBuf,
}

impl Default for CallContext {
    fn default() -> Self {
        CallContext {
            policy: ModePolicy::Auto,
            cap: crate::runtime::DEFAULT_CAP,
            base_dir: PathBuf::from("."),
        }
    }
}

/// A built-in callable: ML estimators, transformers and fitted models, or a
/// built-in function referenced by name.
pub trait NativeFunction: Send + Sync + fmt::Debug {
    /// Registry tag identifying what this native wraps.
    fn tag(&self) -> String;

    fn call(&self, args: Vec<Value>, cx: &CallContext) -> Result<Sequence>;

    fn as_any(&self) -> &dyn Any;
}

#[derive(Clone)]
pub enum FunctionBody {
    Closure(ClosureBody),
    Native(Arc<dyn NativeFunction>),
}

#[derive(Clone)]
pub struct FunctionItem {
    pub name: Option<String>,
    pub signature: FunctionSignature,
    pub body: FunctionBody,
}

impl FunctionItem {
    pub fn native(name: impl Into<String>, signature: FunctionSignature, native: Arc<dyn NativeFunction>) -> Self {
        FunctionItem {
            name: Some(name.into()),
            signature,
            body: FunctionBody::Native(native),
        }
    }

    pub fn arity(&self) -> usize {
        self.signature.arity()
    }

    pub fn native_body(&self) -> Option<&Arc<dyn NativeFunction>> {
        match &self.body {
            FunctionBody::Native(n) => Some(n),
            FunctionBody::Closure(_) => None,
        }
    }

    pub fn call(&self, args: Vec<Value>, cx: &CallContext) -> Result<Sequence> {
        if args.len() != self.arity() {
            bail!(
                ArityMismatch,
                "{} expects {} argument(s), got {}",
                self.display_name(),
                self.arity(),
                args.len()
            );
        }
        match &self.body {
            FunctionBody::Native(native) => native.call(args, cx),
            FunctionBody::Closure(closure) => closure.call(args, cx),
        }
    }

    pub fn display_name(&self) -> String {
        match &self.name {
            Some(n) => format!("{n}#{}", self.arity()),
            None => format!("anonymous function#{}", self.arity()),
        }
    }
}

impl fmt::Debug for FunctionItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match &self.body {
            FunctionBody::Native(n) => n.tag(),
            FunctionBody::Closure(_) => "closure".to_string(),
        };
        write!(f, "<{} [{tag}] {}>", self.display_name(), self.signature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_signature_renders_like_param_table() {
        assert_eq!(
            FunctionSignature::estimator().to_string(),
            "function(object*, object) as function(object*, object) as object*"
        );
        assert_eq!(
            FunctionSignature::transformer().to_string(),
            "function(object*, object) as object*"
        );
        assert!(FunctionSignature::estimator().is_estimator_shaped());
        assert!(!FunctionSignature::estimator().is_transformer_shaped());
        assert!(FunctionSignature::transformer().is_transformer_shaped());
    }

    #[test]
    fn numeric_subtyping() {
        let t = ItemType::Atomic(AtomicKind::Integer);
        assert!(t.matches(&Item::Atomic(super::super::Atomic::Byte(3))));
        assert!(!t.matches(&Item::double(3.0)));
        assert!(ItemType::Atomic(AtomicKind::Double).matches(&Item::integer(3)));
    }
}
