//! Value comparison, deep equality, effective boolean value and arithmetic.

use std::cmp::Ordering;

use bigdecimal::BigDecimal;
use num_bigint::BigInt;
use num_traits::{FromPrimitive, Zero};

use super::{Atomic, Item, Num, Sequence};
use crate::error::{bail, err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn keyword(self) -> &'static str {
        match self {
            CmpOp::Eq => "eq",
            CmpOp::Ne => "ne",
            CmpOp::Lt => "lt",
            CmpOp::Le => "le",
            CmpOp::Gt => "gt",
            CmpOp::Ge => "ge",
        }
    }

    fn holds(self, ord: Option<Ordering>) -> bool {
        match ord {
            // unordered (NaN): only `ne` holds
            None => self == CmpOp::Ne,
            Some(o) => match self {
                CmpOp::Eq => o == Ordering::Equal,
                CmpOp::Ne => o != Ordering::Equal,
                CmpOp::Lt => o == Ordering::Less,
                CmpOp::Le => o != Ordering::Greater,
                CmpOp::Gt => o == Ordering::Greater,
                CmpOp::Ge => o != Ordering::Less,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    IDiv,
    Mod,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "div",
            ArithOp::IDiv => "idiv",
            ArithOp::Mod => "mod",
        }
    }
}

/// `None` means at least one side is not numeric; `Some(None)` means the
/// values are numeric but unordered (NaN).
fn numeric_ordering(a: &Atomic, b: &Atomic) -> Option<Option<Ordering>> {
    match (a, b) {
        (Atomic::Double(x), Atomic::Double(y)) => return Some(x.partial_cmp(y)),
        (Atomic::Double(_) | Atomic::Float(_), _) | (_, Atomic::Double(_) | Atomic::Float(_)) => {
            if a.is_numeric() && b.is_numeric() {
                return Some(a.to_f64()?.partial_cmp(&b.to_f64()?));
            }
            return None;
        }
        _ => {}
    }
    if let (Some(x), Some(y)) = (a.to_i64(), b.to_i64()) {
        return Some(Some(x.cmp(&y)));
    }
    let (x, y) = (a.as_num()?, b.as_num()?);
    Some(match (x, y) {
        (Num::Integer(x), Num::Integer(y)) => Some(x.cmp(&y)),
        (x, y) => Some(x.to_decimal()?.cmp(&y.to_decimal()?)),
    })
}

/// Value comparison between two atomics (`eq`, `lt`, ...).
pub fn value_compare(op: CmpOp, a: &Atomic, b: &Atomic) -> Result<bool> {
    if let Some(ord) = numeric_ordering(a, b) {
        return Ok(op.holds(ord));
    }
    let ord = match (a, b) {
        (Atomic::Null, Atomic::Null) => Ordering::Equal,
        (Atomic::Null, _) => Ordering::Less,
        (_, Atomic::Null) => Ordering::Greater,
        (Atomic::String(x), Atomic::String(y)) => x.cmp(y),
        (Atomic::Boolean(x), Atomic::Boolean(y)) => x.cmp(y),
        (Atomic::Date(x), Atomic::Date(y)) => x.cmp(y),
        (Atomic::DateTime(x), Atomic::DateTime(y)) => x.cmp(y),
        (Atomic::HexBinary(x), Atomic::HexBinary(y)) => x.cmp(y),
        _ => bail!(
            TypeError,
            "cannot compare {} with {} using {}",
            a.kind(),
            b.kind(),
            op.keyword()
        ),
    };
    Ok(op.holds(Some(ord)))
}

/// Total order used by `order by`. Nulls sort first; NaN sorts before other
/// numbers; mixing other categories is an error.
pub fn atomic_order(a: &Atomic, b: &Atomic) -> Result<Ordering> {
    if let Some(ord) = numeric_ordering(a, b) {
        return Ok(ord.unwrap_or_else(|| {
            let (an, bn) = (a.to_f64().is_some_and(f64::is_nan), b.to_f64().is_some_and(f64::is_nan));
            bn.cmp(&an)
        }));
    }
    Ok(match (a, b) {
        (Atomic::Null, Atomic::Null) => Ordering::Equal,
        (Atomic::Null, _) => Ordering::Less,
        (_, Atomic::Null) => Ordering::Greater,
        (Atomic::String(x), Atomic::String(y)) => x.cmp(y),
        (Atomic::Boolean(x), Atomic::Boolean(y)) => x.cmp(y),
        (Atomic::Date(x), Atomic::Date(y)) => x.cmp(y),
        (Atomic::DateTime(x), Atomic::DateTime(y)) => x.cmp(y),
        (Atomic::HexBinary(x), Atomic::HexBinary(y)) => x.cmp(y),
        _ => bail!(
            TypeError,
            "order by keys of mixed types: {} and {}",
            a.kind(),
            b.kind()
        ),
    })
}

fn atomic_deep_equal(a: &Atomic, b: &Atomic) -> bool {
    if let Some(ord) = numeric_ordering(a, b) {
        return match ord {
            Some(o) => o == Ordering::Equal,
            None => a.to_f64().is_some_and(f64::is_nan) && b.to_f64().is_some_and(f64::is_nan),
        };
    }
    match (a, b) {
        (Atomic::Null, Atomic::Null) => true,
        (Atomic::String(x), Atomic::String(y)) => x == y,
        (Atomic::Boolean(x), Atomic::Boolean(y)) => x == y,
        (Atomic::Date(x), Atomic::Date(y)) => x == y,
        (Atomic::DateTime(x), Atomic::DateTime(y)) => x == y,
        (Atomic::HexBinary(x), Atomic::HexBinary(y)) => x == y,
        _ => false,
    }
}

/// Structural equality. Numbers compare by promoted value, object key order
/// is ignored, function items are never equal.
pub fn deep_equal(a: &Item, b: &Item) -> bool {
    match (a, b) {
        (Item::Atomic(x), Item::Atomic(y)) => atomic_deep_equal(x, y),
        (Item::Object(x), Item::Object(y)) => {
            x.len() == y.len()
                && x.iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| deep_equal(v, w)))
        }
        (Item::Array(x), Item::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(v, w)| deep_equal(v, w))
        }
        _ => false,
    }
}

fn atomic_ebv(a: &Atomic) -> Result<bool> {
    Ok(match a {
        Atomic::Boolean(b) => *b,
        Atomic::String(s) => !s.is_empty(),
        Atomic::Null => false,
        Atomic::Double(v) => *v != 0.0 && !v.is_nan(),
        Atomic::Float(v) => *v != 0.0 && !v.is_nan(),
        Atomic::Decimal(d) => !d.is_zero(),
        Atomic::Integer(i) => !i.is_zero(),
        other if other.is_numeric() => other.to_i64() != Some(0),
        other => bail!(EbvError, "no effective boolean value for a {}", other.kind()),
    })
}

pub fn ebv_items(items: &[Item]) -> Result<bool> {
    match items {
        [] => Ok(false),
        [Item::Atomic(a)] => atomic_ebv(a),
        [Item::Atomic(_), ..] => bail!(
            EbvError,
            "no effective boolean value for a sequence of more than one atomic"
        ),
        [other, ..] => bail!(EbvError, "no effective boolean value for a {}", other.type_name()),
    }
}

pub fn effective_boolean_value(seq: Sequence) -> Result<bool> {
    match seq {
        Sequence::Single(item) => ebv_items(std::slice::from_ref(&item)),
        Sequence::Frame(f) if f.is_empty() => Ok(false),
        Sequence::Frame(_) => bail!(EbvError, "no effective boolean value for an object"),
        Sequence::Stream(mut it) => {
            let Some(first) = it.next().transpose()? else {
                return Ok(false);
            };
            match it.next().transpose()? {
                None => ebv_items(&[first]),
                Some(second) => ebv_items(&[first, second]),
            }
        }
    }
}

fn division_by_zero() -> crate::error::Error {
    err!(DivisionByZero, "division by zero")
}

fn float_idiv(x: f64, y: f64) -> Result<Atomic> {
    if y == 0.0 {
        return Err(division_by_zero());
    }
    let q = (x / y).trunc();
    if !q.is_finite() {
        bail!(RangeError, "idiv result {q} is not an integer");
    }
    Ok(Atomic::Integer(BigInt::from_f64(q).expect("finite")))
}

fn trunc_decimal(d: &BigDecimal) -> BigInt {
    d.with_scale_round(0, bigdecimal::RoundingMode::Down)
        .into_bigint_and_exponent()
        .0
}

/// Binary arithmetic with numeric type promotion.
pub fn arithmetic(op: ArithOp, a: &Atomic, b: &Atomic) -> Result<Atomic> {
    if let (Atomic::Double(x), Atomic::Double(y)) = (a, b) {
        return double_arith(op, *x, *y);
    }
    let (Some(x), Some(y)) = (a.as_num(), b.as_num()) else {
        bail!(
            TypeError,
            "arithmetic {} on {} and {}",
            op.symbol(),
            a.kind(),
            b.kind()
        );
    };
    match x.rank().max(y.rank()) {
        0 => {
            let (Num::Integer(x), Num::Integer(y)) = (x, y) else { unreachable!() };
            Ok(match op {
                ArithOp::Add => Atomic::Integer(x + y),
                ArithOp::Sub => Atomic::Integer(x - y),
                ArithOp::Mul => Atomic::Integer(x * y),
                ArithOp::Div => {
                    if y.is_zero() {
                        return Err(division_by_zero());
                    }
                    Atomic::Decimal(BigDecimal::from(x) / BigDecimal::from(y))
                }
                ArithOp::IDiv => {
                    if y.is_zero() {
                        return Err(division_by_zero());
                    }
                    Atomic::Integer(x / y)
                }
                ArithOp::Mod => {
                    if y.is_zero() {
                        return Err(division_by_zero());
                    }
                    Atomic::Integer(x % y)
                }
            })
        }
        1 => {
            let x = x.to_decimal().expect("decimal rank");
            let y = y.to_decimal().expect("decimal rank");
            Ok(match op {
                ArithOp::Add => Atomic::Decimal(x + y),
                ArithOp::Sub => Atomic::Decimal(x - y),
                ArithOp::Mul => Atomic::Decimal(x * y),
                ArithOp::Div | ArithOp::IDiv | ArithOp::Mod if y.is_zero() => {
                    return Err(division_by_zero())
                }
                ArithOp::Div => Atomic::Decimal(x / y),
                ArithOp::IDiv => Atomic::Integer(trunc_decimal(&(x / y))),
                ArithOp::Mod => {
                    let q = BigDecimal::from(trunc_decimal(&(&x / &y)));
                    Atomic::Decimal(x - y * q)
                }
            })
        }
        2 => {
            let (x, y) = (x.to_f64() as f32, y.to_f64() as f32);
            Ok(match op {
                ArithOp::Add => Atomic::Float(x + y),
                ArithOp::Sub => Atomic::Float(x - y),
                ArithOp::Mul => Atomic::Float(x * y),
                ArithOp::Div => Atomic::Float(x / y),
                ArithOp::IDiv => return float_idiv(x as f64, y as f64),
                ArithOp::Mod => Atomic::Float(x % y),
            })
        }
        _ => double_arith(op, x.to_f64(), y.to_f64()),
    }
}

fn double_arith(op: ArithOp, x: f64, y: f64) -> Result<Atomic> {
    Ok(Atomic::Double(match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div => x / y,
        ArithOp::IDiv => return float_idiv(x, y),
        ArithOp::Mod => x % y,
    }))
}

/// Unary minus.
pub(crate) fn negate(a: &Atomic) -> Result<Atomic> {
    Ok(match a.as_num() {
        Some(Num::Integer(i)) => Atomic::Integer(-i),
        Some(Num::Decimal(d)) => Atomic::Decimal(-d),
        Some(Num::Float(f)) => Atomic::Float(-f),
        Some(Num::Double(d)) => Atomic::Double(-d),
        None => bail!(TypeError, "unary minus on a {}", a.kind()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorCode;
    use crate::item::Object;

    fn int(v: i64) -> Atomic {
        Atomic::Integer(BigInt::from(v))
    }

    #[test]
    fn numeric_promotion_in_deep_equal() {
        assert!(deep_equal(&Item::integer(1), &Item::double(1.0)));
        assert!(deep_equal(&Item::Atomic(Atomic::Byte(1)), &Item::integer(1)));
        assert!(!deep_equal(&Item::integer(1), &Item::string("1")));
    }

    #[test]
    fn object_key_order_irrelevant() {
        let a = Object::from_pairs([("a", Item::integer(1)), ("b", Item::integer(2))]).unwrap();
        let b = Object::from_pairs([("b", Item::integer(2)), ("a", Item::integer(1))]).unwrap();
        assert!(deep_equal(&Item::object(a), &Item::object(b)));
    }

    #[test]
    fn nested_arrays_differ() {
        let a = Item::array(vec![Item::integer(1), Item::array(vec![Item::integer(2)])]);
        let b = Item::array(vec![Item::integer(1), Item::array(vec![Item::integer(3)])]);
        assert!(!deep_equal(&a, &b));
    }

    #[test]
    fn ebv_cases() {
        assert!(!effective_boolean_value(Sequence::empty()).unwrap());
        assert!(effective_boolean_value(Sequence::Single(Item::string("indoor"))).unwrap());
        assert!(!effective_boolean_value(Sequence::Single(Item::integer(0))).unwrap());
        assert!(!effective_boolean_value(Sequence::Single(Item::double(f64::NAN))).unwrap());
        assert!(!effective_boolean_value(Sequence::Single(Item::null())).unwrap());
        let obj = Item::object(Object::new());
        assert_eq!(
            effective_boolean_value(Sequence::Single(obj)).unwrap_err().code,
            ErrorCode::EbvError
        );
        let two = Sequence::from_items(vec![Item::integer(1), Item::integer(2)]);
        assert_eq!(effective_boolean_value(two).unwrap_err().code, ErrorCode::EbvError);
    }

    #[test]
    fn integer_division_is_decimal() {
        let r = arithmetic(ArithOp::Div, &int(3), &int(4)).unwrap();
        assert_eq!(r.lexical(), "0.75");
        assert!(matches!(r, Atomic::Decimal(_)));
        assert_eq!(arithmetic(ArithOp::IDiv, &int(-7), &int(2)).unwrap().lexical(), "-3");
        assert_eq!(arithmetic(ArithOp::Mod, &int(-7), &int(2)).unwrap().lexical(), "-1");
        assert_eq!(
            arithmetic(ArithOp::Div, &int(1), &int(0)).unwrap_err().code,
            ErrorCode::DivisionByZero
        );
        assert!(matches!(
            arithmetic(ArithOp::Div, &Atomic::Double(1.0), &int(0)),
            Ok(Atomic::Double(v)) if v.is_infinite()
        ));
    }

    #[test]
    fn compare_semantics() {
        assert!(value_compare(CmpOp::Eq, &int(1), &Atomic::Double(1.0)).unwrap());
        assert!(value_compare(CmpOp::Lt, &Atomic::String("a".into()), &Atomic::String("b".into())).unwrap());
        assert!(!value_compare(CmpOp::Eq, &Atomic::Double(f64::NAN), &Atomic::Double(f64::NAN)).unwrap());
        assert!(value_compare(CmpOp::Ne, &Atomic::Double(f64::NAN), &Atomic::Double(f64::NAN)).unwrap());
        assert!(value_compare(CmpOp::Lt, &Atomic::Null, &int(0)).unwrap());
        assert_eq!(
            value_compare(CmpOp::Eq, &Atomic::String("1".into()), &int(1)).unwrap_err().code,
            ErrorCode::TypeError
        );
    }

    #[test]
    fn arithmetic_type_error() {
        let e = arithmetic(ArithOp::Add, &Atomic::String("a".into()), &int(1)).unwrap_err();
        assert_eq!(e.code, ErrorCode::TypeError);
    }
}
