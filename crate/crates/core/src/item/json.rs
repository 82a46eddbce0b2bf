//! Canonical JSON text form of items, and the JSON reader.

use std::str::FromStr;

use bigdecimal::BigDecimal;
use num_bigint::BigInt;

use super::atomic::decimal_lexical;
use super::{Atomic, Item, Object};
use crate::error::{bail, err, Result};

/// Deterministic JSON rendering: keys in construction order, `", "` and
/// `": "` separators, doubles in shortest round-trip form. Non-finite
/// doubles render as the bare tokens `NaN`, `INF` and `-INF`.
pub fn canonical_serialize(item: &Item) -> Result<String> {
    let mut out = String::new();
    write_item(item, &mut out)?;
    Ok(out)
}

fn write_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

fn write_double(v: f64, out: &mut String) {
    if v.is_nan() {
        out.push_str("NaN");
    } else if v.is_infinite() {
        out.push_str(if v > 0.0 { "INF" } else { "-INF" });
    } else {
        out.push_str(ryu::Buffer::new().format_finite(v));
    }
}

fn write_atomic(a: &Atomic, out: &mut String) {
    match a {
        Atomic::String(s) => write_string(s, out),
        Atomic::Boolean(b) => out.push_str(if *b { "true" } else { "false" }),
        Atomic::Null => out.push_str("null"),
        Atomic::Decimal(d) => out.push_str(&decimal_lexical(d)),
        Atomic::Double(v) => write_double(*v, out),
        Atomic::Float(v) => write_double(*v as f64, out),
        Atomic::Date(_) | Atomic::DateTime(_) | Atomic::HexBinary(_) => {
            write_string(&a.lexical(), out)
        }
        other => out.push_str(&other.lexical()),
    }
}

fn write_item(item: &Item, out: &mut String) -> Result<()> {
    match item {
        Item::Atomic(a) => write_atomic(a, out),
        Item::Object(obj) => {
            out.push('{');
            for (i, (k, v)) in obj.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_string(k, out);
                out.push_str(": ");
                write_item(v, out)?;
            }
            out.push('}');
        }
        Item::Array(members) => {
            out.push('[');
            for (i, v) in members.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_item(v, out)?;
            }
            out.push(']');
        }
        Item::Function(f) => bail!(
            SerializeFunction,
            "cannot serialize function item {}",
            f.display_name()
        ),
    }
    Ok(())
}

/// Parses one JSON value. Numbers keep their lexical category: no fraction
/// or exponent is an integer, an exponent makes a double, otherwise decimal.
pub fn parse_json(text: &str) -> Result<Item> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| err!(JsonError, "invalid JSON: {e}"))?;
    from_json_value(value)
}

fn number_item(lexical: &str) -> Result<Item> {
    let bad = || err!(JsonError, "invalid JSON number {lexical}");
    if lexical.contains(['e', 'E']) {
        let v: f64 = lexical.parse().map_err(|_| bad())?;
        Ok(Item::double(v))
    } else if lexical.contains('.') {
        Ok(Item::decimal(BigDecimal::from_str(lexical).map_err(|_| bad())?))
    } else {
        Ok(Item::big_integer(BigInt::from_str(lexical).map_err(|_| bad())?))
    }
}

pub(crate) fn from_json_value(value: serde_json::Value) -> Result<Item> {
    use serde_json::Value as J;
    Ok(match value {
        J::Null => Item::null(),
        J::Bool(b) => Item::boolean(b),
        J::Number(n) => number_item(n.as_str())?,
        J::String(s) => Item::string(s),
        J::Array(members) => Item::array(
            members
                .into_iter()
                .map(from_json_value)
                .collect::<Result<_>>()?,
        ),
        J::Object(map) => {
            let mut obj = Object::with_capacity(map.len());
            for (k, v) in map {
                obj.insert(k, from_json_value(v)?)?;
            }
            Item::object(obj)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorCode;
    use crate::item::{deep_equal, FunctionItem, FunctionSignature, NativeFunction, Sequence, Value};
    use crate::item::CallContext;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn renders_in_construction_order() {
        let obj = Object::from_pairs([
            ("a", Item::integer(1)),
            ("b", Item::array(vec![Item::double(2.5)])),
        ])
        .unwrap();
        assert_eq!(canonical_serialize(&Item::object(obj)).unwrap(), r#"{"a": 1, "b": [2.5]}"#);
    }

    #[test]
    fn empty_array() {
        assert_eq!(canonical_serialize(&Item::array(vec![])).unwrap(), "[]");
    }

    #[derive(Debug)]
    struct Dummy;
    impl NativeFunction for Dummy {
        fn tag(&self) -> String {
            "dummy".into()
        }
        fn call(&self, _: Vec<Value>, _: &CallContext) -> Result<Sequence> {
            Ok(Sequence::empty())
        }
        fn as_any(&self) -> &dyn std::any::Any {
            self
        }
    }

    #[test]
    fn function_items_do_not_serialize() {
        let f = FunctionItem::native("m", FunctionSignature::transformer(), Arc::new(Dummy));
        let obj = Object::from_pairs([("model", Item::function(f))]).unwrap();
        let e = canonical_serialize(&Item::object(obj)).unwrap_err();
        assert_eq!(e.code, ErrorCode::SerializeFunction);
    }

    #[test]
    fn number_categories() {
        assert!(matches!(parse_json("1").unwrap(), Item::Atomic(Atomic::Integer(_))));
        assert!(matches!(parse_json("1.5").unwrap(), Item::Atomic(Atomic::Decimal(_))));
        assert!(matches!(parse_json("1e2").unwrap(), Item::Atomic(Atomic::Double(_))));
        assert!(matches!(
            parse_json("123456789012345678901234567890").unwrap(),
            Item::Atomic(Atomic::Integer(_))
        ));
    }

    pub(crate) fn arb_item() -> impl Strategy<Value = Item> {
        let leaf = prop_oneof![
            any::<bool>().prop_map(Item::boolean),
            Just(Item::null()),
            any::<i64>().prop_map(Item::integer),
            any::<f64>()
                .prop_filter("finite", |v| v.is_finite())
                .prop_map(Item::double),
            (any::<i64>(), 0i64..12).prop_map(|(m, s)| Item::decimal(BigDecimal::new(m.into(), s))),
            "[a-z\\\\\"\\n\u{e9} ]{0,8}".prop_map(Item::string),
        ];
        leaf.prop_recursive(5, 64, 6, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..5).prop_map(Item::array),
                prop::collection::btree_map("[a-z0-9]{1,4}", inner, 0..5).prop_map(|m| {
                    Item::object(Object::from_pairs(m).expect("unique keys"))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn canonical_json_round_trips(item in arb_item()) {
            let text = canonical_serialize(&item).unwrap();
            let back = parse_json(&text).unwrap();
            prop_assert!(deep_equal(&item, &back), "{} vs {:?}", text, back);
        }

        #[test]
        fn deep_equal_is_an_equivalence(a in arb_item(), b in arb_item(), c in arb_item()) {
            prop_assert!(deep_equal(&a, &a));
            prop_assert_eq!(deep_equal(&a, &b), deep_equal(&b, &a));
            if deep_equal(&a, &b) && deep_equal(&b, &c) {
                prop_assert!(deep_equal(&a, &c));
            }
            let a2 = parse_json(&canonical_serialize(&a).unwrap()).unwrap();
            prop_assert!(deep_equal(&a2, &a) && deep_equal(&a, &a2));
        }
    }
}
