//! The built-in function catalog.
//!
//! Each entry records how its result is represented, which is all that
//! mode inference needs to know about a built-in.

use std::any::Any;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use super::ModePolicy;
use crate::error::{bail, err, Error, Result};
use crate::item::{
    arithmetic, atomic_order, deep_equal, ebv_items, ArithOp, Atomic, AtomicKind, CallContext,
    FunctionSignature, Item, ItemType, NativeFunction, Object, Occurrence, Sequence, SequenceType,
    Value,
};
use crate::{ml, schema};

pub type BuiltinId = usize;

/// How a built-in's result is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinMode {
    One,
    Seq,
    Frame,
}

type Impl = fn(Vec<Sequence>, &CallContext) -> Result<Sequence>;

pub struct Builtin {
    pub name: &'static str,
    pub arity: usize,
    pub mode: BuiltinMode,
    /// Depends only on its arguments: no IO, no registry access.
    pub pure: bool,
    imp: Impl,
}

impl std::fmt::Debug for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.name, self.arity)
    }
}

macro_rules! catalog {
    ($($name:literal / $arity:literal => $mode:ident, $pure:literal, $imp:expr;)*) => {
        static CATALOG: &[Builtin] = &[
            $(Builtin { name: $name, arity: $arity, mode: BuiltinMode::$mode, pure: $pure, imp: $imp },)*
        ];
    };
}

catalog! {
    "unparsed-text-lines" / 1 => Seq, false, unparsed_text_lines;
    "json-lines" / 1 => Seq, false, json_lines;
    "annotate" / 2 => Frame, false, annotate;
    "get-estimator" / 2 => One, false, get_estimator;
    "get-transformer" / 2 => One, false, get_transformer;
    "save-model" / 2 => One, false, save_model;
    "load-model" / 1 => One, false, load_model;
    "tokenize" / 2 => Seq, true, tokenize;
    "contains" / 2 => One, true, contains;
    "starts-with" / 2 => One, true, starts_with;
    "ends-with" / 2 => One, true, ends_with;
    "head" / 1 => One, true, head;
    "tail" / 1 => Seq, true, tail;
    "count" / 1 => One, true, count;
    "string" / 1 => One, true, string;
    "string-length" / 1 => One, true, string_length;
    "upper-case" / 1 => One, true, upper_case;
    "lower-case" / 1 => One, true, lower_case;
    "concat" / 2 => One, true, concat;
    "substring" / 2 => One, true, substring2;
    "substring" / 3 => One, true, substring3;
    "string-join" / 2 => One, true, string_join;
    "boolean" / 1 => One, true, boolean;
    "number" / 1 => One, true, number;
    "abs" / 1 => One, true, abs;
    "floor" / 1 => One, true, floor;
    "ceiling" / 1 => One, true, ceiling;
    "round" / 1 => One, true, round;
    "sum" / 1 => One, true, sum;
    "avg" / 1 => One, true, avg;
    "min" / 1 => One, true, min;
    "max" / 1 => One, true, max;
    "exists" / 1 => One, true, exists;
    "empty" / 1 => One, true, empty;
    "reverse" / 1 => Seq, true, reverse;
    "subsequence" / 3 => Seq, true, subsequence;
    "distinct-values" / 1 => Seq, true, distinct_values;
    "keys" / 1 => Seq, true, keys;
    "members" / 1 => Seq, true, members;
    "size" / 1 => One, true, size;
}

pub fn lookup(name: &str, arity: usize) -> Option<BuiltinId> {
    CATALOG.iter().position(|b| b.name == name && b.arity == arity)
}

pub fn get(id: BuiltinId) -> &'static Builtin {
    &CATALOG[id]
}

pub fn all() -> impl Iterator<Item = &'static Builtin> {
    CATALOG.iter()
}

pub fn call(id: BuiltinId, args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    (CATALOG[id].imp)(args, cx)
}

/// Static type of a built-in's result, when it is a single function item.
pub fn returned_signature(id: BuiltinId) -> Option<FunctionSignature> {
    match CATALOG[id].name {
        "get-estimator" => Some(FunctionSignature::estimator()),
        "get-transformer" | "load-model" => Some(FunctionSignature::transformer()),
        _ => None,
    }
}

pub fn signature(id: BuiltinId) -> FunctionSignature {
    let b = &CATALOG[id];
    let ret = match returned_signature(id) {
        Some(sig) => SequenceType::function(sig),
        None => SequenceType::new(
            ItemType::Item,
            match b.mode {
                BuiltinMode::One => Occurrence::Optional,
                _ => Occurrence::ZeroOrMore,
            },
        ),
    };
    FunctionSignature {
        params: vec![SequenceType::any(); b.arity],
        ret,
    }
}

/// A built-in wrapped as a function item by a named function reference.
#[derive(Debug)]
pub struct BuiltinFunction(pub BuiltinId);

impl NativeFunction for BuiltinFunction {
    fn tag(&self) -> String {
        let b = get(self.0);
        format!("builtin:{}#{}", b.name, b.arity)
    }

    fn call(&self, args: Vec<Value>, cx: &CallContext) -> Result<Sequence> {
        call(self.0, args.into_iter().map(Sequence::from).collect(), cx)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

fn one<T>(args: Vec<T>) -> T {
    args.into_iter().next().expect("arity checked by resolution")
}

fn two<T>(args: Vec<T>) -> (T, T) {
    let mut it = args.into_iter();
    (it.next().expect("arity"), it.next().expect("arity"))
}

fn opt_atomic(seq: Sequence, what: &str) -> Result<Option<Atomic>> {
    match seq.at_most_one(what)? {
        None => Ok(None),
        Some(Item::Atomic(a)) => Ok(Some(a)),
        Some(other) => bail!(TypeError, "{what} expects an atomic value, got {}", other.type_name()),
    }
}

/// String argument; the empty sequence reads as "".
fn string_arg(seq: Sequence, what: &str) -> Result<String> {
    match opt_atomic(seq, what)? {
        None => Ok(String::new()),
        Some(Atomic::String(s)) => Ok(s.to_string()),
        Some(other) => bail!(TypeError, "{what} expects a string, got {}", other.kind()),
    }
}

fn integer_arg(seq: Sequence, what: &str) -> Result<i64> {
    match opt_atomic(seq, what)? {
        Some(a) if a.kind().is_integer_family() => {
            a.to_i64().ok_or_else(|| err!(RangeError, "{what}: integer out of range"))
        }
        Some(a) if a.is_numeric() => Ok(a.to_f64().unwrap_or(f64::NAN).round() as i64),
        Some(other) => bail!(TypeError, "{what} expects a number, got {}", other.kind()),
        None => bail!(TypeError, "{what} expects a number, got the empty sequence"),
    }
}

fn resolve_path(base: &Path, raw: &str) -> PathBuf {
    let raw = raw.strip_prefix("file://").unwrap_or(raw);
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn open_lines(args: Vec<Sequence>, cx: &CallContext, what: &str) -> Result<(String, std::io::Lines<BufReader<File>>)> {
    let uri = string_arg(one(args), what)?;
    let path = resolve_path(&cx.base_dir, &uri);
    let file = File::open(&path).map_err(|e| Error::io(&uri, e))?;
    Ok((uri, BufReader::new(file).lines()))
}

fn unparsed_text_lines(args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    let (uri, lines) = open_lines(args, cx, "unparsed-text-lines")?;
    Ok(Sequence::from_iter(lines.map(move |l| {
        l.map(|mut s| {
            if s.ends_with('\r') {
                s.pop();
            }
            Item::string(s)
        })
        .map_err(|e| Error::io(&uri, e))
    })))
}

fn json_lines(args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    let (uri, lines) = open_lines(args, cx, "json-lines")?;
    Ok(Sequence::from_iter(lines.filter_map(move |l| match l {
        Err(e) => Some(Err(Error::io(&uri, e))),
        Ok(s) if s.trim().is_empty() => None,
        Ok(s) => Some(crate::item::parse_json(&s)),
    })))
}

fn annotate(args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    let (rows, descriptor) = two(args);
    let descriptor = descriptor.exactly_one("annotate schema")?;
    let rows = rows.collect_all()?;
    if cx.policy == ModePolicy::ForceLocal {
        let td = schema::parse_schema(&descriptor)?;
        if !matches!(td, schema::TypeDescriptor::Record(_)) {
            bail!(MalformedSchema, "annotate needs an object descriptor, got {td}");
        }
        return Ok(Sequence::from_items(schema::validate_rows(&rows, &td)?));
    }
    Ok(Sequence::Frame(std::sync::Arc::new(schema::annotate(&rows, &descriptor)?)))
}

fn name_and_params(args: Vec<Sequence>, what: &str) -> Result<(String, Object)> {
    let (name, params) = two(args);
    let name = string_arg(name, what)?;
    let params = match params.exactly_one(what)? {
        Item::Object(o) => (*o).clone(),
        other => bail!(TypeError, "{what} expects a parameter object, got {}", other.type_name()),
    };
    Ok((name, params))
}

fn get_estimator(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (name, params) = name_and_params(args, "get-estimator")?;
    Ok(Sequence::Single(Item::function(ml::get_estimator(&name, &params)?)))
}

fn get_transformer(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (name, params) = name_and_params(args, "get-transformer")?;
    Ok(Sequence::Single(Item::function(ml::get_transformer(&name, &params)?)))
}

fn save_model(args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    let (model, path) = two(args);
    let model = match model.exactly_one("save-model")? {
        Item::Function(f) => f,
        other => bail!(UnknownModelKind, "save-model expects a model, got {}", other.type_name()),
    };
    let path = string_arg(path, "save-model")?;
    ml::save_model(&model, &resolve_path(&cx.base_dir, &path))?;
    Ok(Sequence::Single(Item::string(path)))
}

fn load_model(args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    let path = string_arg(one(args), "load-model")?;
    Ok(Sequence::Single(Item::function(ml::load_model(&resolve_path(&cx.base_dir, &path))?)))
}

fn tokenize(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (s, sep) = two(args);
    let s = string_arg(s, "tokenize")?;
    let sep = string_arg(sep, "tokenize")?;
    if sep.is_empty() {
        bail!(TypeError, "tokenize separator must not be empty");
    }
    if s.is_empty() {
        return Ok(Sequence::empty());
    }
    let mut parts: Vec<Item> = s.split(sep.as_str()).map(Item::string).collect();
    if s.ends_with(sep.as_str()) {
        parts.pop();
    }
    Ok(Sequence::from_items(parts))
}

fn string_pair(args: Vec<Sequence>, what: &str) -> Result<(String, String)> {
    let (a, b) = two(args);
    Ok((string_arg(a, what)?, string_arg(b, what)?))
}

fn contains(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (s, sub) = string_pair(args, "contains")?;
    Ok(Sequence::Single(Item::boolean(s.contains(&sub))))
}

fn starts_with(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (s, sub) = string_pair(args, "starts-with")?;
    Ok(Sequence::Single(Item::boolean(s.starts_with(&sub))))
}

fn ends_with(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (s, sub) = string_pair(args, "ends-with")?;
    Ok(Sequence::Single(Item::boolean(s.ends_with(&sub))))
}

fn head(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    Ok(Sequence::optional(one(args).first()?))
}

fn tail(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    Ok(Sequence::from_iter(one(args).into_iter().skip(1)))
}

fn count(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let n = one(args).count()?;
    Ok(Sequence::Single(Item::integer(n as i64)))
}

fn string(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let s = match one(args).at_most_one("string")? {
        None => String::new(),
        Some(Item::Atomic(a)) => a.lexical(),
        Some(other) => bail!(TypeError, "string() is not defined for {}", other.type_name()),
    };
    Ok(Sequence::Single(Item::string(s)))
}

fn string_length(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let s = string_arg(one(args), "string-length")?;
    Ok(Sequence::Single(Item::integer(s.chars().count() as i64)))
}

fn upper_case(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    Ok(Sequence::Single(Item::string(string_arg(one(args), "upper-case")?.to_uppercase())))
}

fn lower_case(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    Ok(Sequence::Single(Item::string(string_arg(one(args), "lower-case")?.to_lowercase())))
}

fn atomic_text(seq: Sequence, what: &str) -> Result<String> {
    Ok(opt_atomic(seq, what)?.map(|a| a.lexical()).unwrap_or_default())
}

fn concat(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (a, b) = two(args);
    let s = atomic_text(a, "concat")? + &atomic_text(b, "concat")?;
    Ok(Sequence::Single(Item::string(s)))
}

fn substring_impl(s: String, start: i64, len: Option<i64>) -> Sequence {
    // 1-based start; characters before position 1 are cut off
    let chars: Vec<char> = s.chars().collect();
    let from = start.max(1);
    let to = match len {
        Some(l) => start.saturating_add(l),
        None => i64::MAX,
    };
    let out: String = chars
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let p = *i as i64 + 1;
            p >= from && p < to
        })
        .map(|(_, c)| *c)
        .collect();
    Sequence::Single(Item::string(out))
}

fn substring2(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (s, start) = two(args);
    Ok(substring_impl(string_arg(s, "substring")?, integer_arg(start, "substring")?, None))
}

fn substring3(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let mut it = args.into_iter();
    let s = string_arg(it.next().expect("arity"), "substring")?;
    let start = integer_arg(it.next().expect("arity"), "substring")?;
    let len = integer_arg(it.next().expect("arity"), "substring")?;
    Ok(substring_impl(s, start, Some(len)))
}

fn string_join(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let (items, sep) = two(args);
    let sep = string_arg(sep, "string-join")?;
    let mut parts = Vec::new();
    for item in items.into_iter() {
        match item? {
            Item::Atomic(a) => parts.push(a.lexical()),
            other => bail!(TypeError, "string-join expects atomic values, got {}", other.type_name()),
        }
    }
    Ok(Sequence::Single(Item::string(parts.join(&sep))))
}

fn boolean(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let items = one(args).into_iter().take(2).collect::<Result<Vec<_>>>()?;
    Ok(Sequence::Single(Item::boolean(ebv_items(&items)?)))
}

fn number(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let v = match opt_atomic(one(args), "number")? {
        None => f64::NAN,
        Some(a) => match a.cast(AtomicKind::Double) {
            Ok(Atomic::Double(v)) => v,
            _ => f64::NAN,
        },
    };
    Ok(Sequence::Single(Item::double(v)))
}

fn numeric_arg(seq: Sequence, what: &str) -> Result<Option<Atomic>> {
    match opt_atomic(seq, what)? {
        Some(a) if a.is_numeric() => Ok(Some(a)),
        Some(a) => bail!(TypeError, "{what} expects a number, got {}", a.kind()),
        None => Ok(None),
    }
}

fn rounding(args: Vec<Sequence>, what: &str, f: fn(f64) -> f64, d: fn(&bigdecimal::BigDecimal) -> bigdecimal::BigDecimal) -> Result<Sequence> {
    let Some(a) = numeric_arg(one(args), what)? else {
        return Ok(Sequence::empty());
    };
    let out = match a {
        Atomic::Double(v) => Atomic::Double(f(v)),
        Atomic::Float(v) => Atomic::Float(f(v as f64) as f32),
        Atomic::Decimal(v) => Atomic::Decimal(d(&v)),
        integer => integer,
    };
    Ok(Sequence::Single(Item::Atomic(out)))
}

fn abs(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let Some(a) = numeric_arg(one(args), "abs")? else {
        return Ok(Sequence::empty());
    };
    let out = match a {
        Atomic::Double(v) => Atomic::Double(v.abs()),
        Atomic::Float(v) => Atomic::Float(v.abs()),
        Atomic::Decimal(v) => Atomic::Decimal(v.abs()),
        Atomic::Integer(v) => Atomic::Integer(v.abs()),
        other => match other.to_i64() {
            Some(v) => Atomic::Integer(BigInt::from(v).abs()),
            None => other,
        },
    };
    Ok(Sequence::Single(Item::Atomic(out)))
}

fn floor(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    rounding(args, "floor", f64::floor, |d| d.with_scale_round(0, bigdecimal::RoundingMode::Floor))
}

fn ceiling(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    rounding(args, "ceiling", f64::ceil, |d| d.with_scale_round(0, bigdecimal::RoundingMode::Ceiling))
}

fn round(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    // half rounds toward positive infinity
    rounding(args, "round", |v| (v + 0.5).floor(), |d| {
        (d + bigdecimal::BigDecimal::new(5.into(), 1)).with_scale_round(0, bigdecimal::RoundingMode::Floor)
    })
}

fn numeric_items(seq: Sequence, what: &str) -> Result<Vec<Atomic>> {
    seq.into_iter()
        .map(|i| match i? {
            Item::Atomic(a) if a.is_numeric() => Ok(a),
            other => bail!(TypeError, "{what} expects numbers, got {}", other.type_name()),
        })
        .collect()
}

fn sum(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let mut total = Atomic::Integer(BigInt::from(0));
    for a in numeric_items(one(args), "sum")? {
        total = arithmetic(ArithOp::Add, &total, &a)?;
    }
    Ok(Sequence::Single(Item::Atomic(total)))
}

fn avg(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let items = numeric_items(one(args), "avg")?;
    if items.is_empty() {
        return Ok(Sequence::empty());
    }
    let mut total = Atomic::Integer(BigInt::from(0));
    for a in &items {
        total = arithmetic(ArithOp::Add, &total, a)?;
    }
    let n = Atomic::Integer(BigInt::from(items.len()));
    Ok(Sequence::Single(Item::Atomic(arithmetic(ArithOp::Div, &total, &n)?)))
}

fn extreme(args: Vec<Sequence>, what: &str, want: std::cmp::Ordering) -> Result<Sequence> {
    let mut best: Option<Atomic> = None;
    for item in one(args).into_iter() {
        let Item::Atomic(a) = item? else {
            bail!(TypeError, "{what} expects atomic values");
        };
        best = Some(match best {
            None => a,
            Some(b) => {
                if atomic_order(&a, &b)? == want {
                    a
                } else {
                    b
                }
            }
        });
    }
    Ok(Sequence::optional(best.map(Item::Atomic)))
}

fn min(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    extreme(args, "min", std::cmp::Ordering::Less)
}

fn max(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    extreme(args, "max", std::cmp::Ordering::Greater)
}

fn exists(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    Ok(Sequence::Single(Item::boolean(one(args).first()?.is_some())))
}

fn empty(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    Ok(Sequence::Single(Item::boolean(one(args).first()?.is_none())))
}

fn reverse(args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    let mut items = one(args).materialize(cx.cap)?;
    items.reverse();
    Ok(Sequence::from_items(items))
}

fn subsequence(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let mut it = args.into_iter();
    let seq = it.next().expect("arity");
    let start = integer_arg(it.next().expect("arity"), "subsequence")?;
    let len = integer_arg(it.next().expect("arity"), "subsequence")?;
    let from = start.max(1);
    let to = start.saturating_add(len);
    if to <= from {
        return Ok(Sequence::empty());
    }
    let skip = (from - 1) as usize;
    let take = (to - from) as usize;
    Ok(Sequence::from_iter(seq.into_iter().skip(skip).take(take)))
}

fn distinct_values(args: Vec<Sequence>, cx: &CallContext) -> Result<Sequence> {
    let mut seen: Vec<Item> = Vec::new();
    for item in one(args).into_iter() {
        let item = item?;
        if !matches!(item, Item::Atomic(_)) {
            bail!(TypeError, "distinct-values expects atomic values, got {}", item.type_name());
        }
        if !seen.iter().any(|s| deep_equal(s, &item)) {
            if seen.len() == cx.cap {
                bail!(MaterializationCapExceeded, "distinct-values exceeds the cap of {} items", cx.cap);
            }
            seen.push(item);
        }
    }
    Ok(Sequence::from_items(seen))
}

fn keys(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let mut out: Vec<String> = Vec::new();
    for item in one(args).into_iter() {
        if let Item::Object(o) = item? {
            for k in o.keys() {
                if !out.iter().any(|x| x == k) {
                    out.push(k.to_string());
                }
            }
        }
    }
    Ok(Sequence::from_items(out.into_iter().map(Item::string).collect()))
}

fn members(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    let mut out = Vec::new();
    for item in one(args).into_iter() {
        if let Item::Array(a) = item? {
            out.extend(a.iter().cloned());
        }
    }
    Ok(Sequence::from_items(out))
}

fn size(args: Vec<Sequence>, _: &CallContext) -> Result<Sequence> {
    match one(args).at_most_one("size")? {
        None => Ok(Sequence::empty()),
        Some(Item::Array(a)) => Ok(Sequence::Single(Item::integer(a.len() as i64))),
        Some(other) => bail!(TypeError, "size expects an array, got {}", other.type_name()),
    }
}

#[allow(dead_code)]
fn to_usize(v: &BigInt) -> Option<usize> {
    v.to_usize()
}
