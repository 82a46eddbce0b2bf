//! Compact JSound schemas: parsing, validation with casting, and derivation
//! of frame schemas.
//!
//! A descriptor is an ordinary item. A string names an atomic type, a
//! one-member array describes arrays of that member, and an object maps
//! field names to descriptors.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{bail, err, Error, ErrorCode, Result};
use crate::frame::{frame_type_of_kind, Frame, FrameType, Schema, BLOCK_ROWS};
use crate::item::{AtomicKind, Item, Object};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeDescriptor {
    Atomic(AtomicKind),
    Array(Box<TypeDescriptor>),
    Record(Vec<(Arc<str>, TypeDescriptor)>),
}

impl fmt::Display for TypeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeDescriptor::Atomic(k) => write!(f, "{k}"),
            TypeDescriptor::Array(m) => write!(f, "[{m}]"),
            TypeDescriptor::Record(fields) => {
                f.write_str("{")?;
                for (i, (name, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{name}: {t}")?;
                }
                f.write_str("}")
            }
        }
    }
}

pub fn parse_schema(descriptor: &Item) -> Result<TypeDescriptor> {
    match descriptor {
        Item::Atomic(a) => match a.as_str() {
            Some(name) => match AtomicKind::from_name(name) {
                Some(kind) => Ok(TypeDescriptor::Atomic(kind)),
                None => bail!(UnknownTypeName, "unknown type name {name:?}"),
            },
            None => bail!(MalformedSchema, "atomic type names must be strings, got {}", a.kind()),
        },
        Item::Array(members) => {
            if members.len() != 1 {
                bail!(
                    MalformedSchema,
                    "array descriptors need exactly one member, got {}",
                    members.len()
                );
            }
            Ok(TypeDescriptor::Array(Box::new(parse_schema(&members[0])?)))
        }
        Item::Object(obj) => Ok(TypeDescriptor::Record(
            obj.iter()
                .map(|(k, v)| Ok((Arc::from(k), parse_schema(v)?)))
                .collect::<Result<_>>()?,
        )),
        Item::Function(_) => bail!(MalformedSchema, "a function item is not a schema descriptor"),
    }
}

/// Frame column type for a descriptor, following the type-mapping table.
pub fn map_frame_type(td: &TypeDescriptor) -> FrameType {
    match td {
        TypeDescriptor::Atomic(kind) => frame_type_of_kind(*kind),
        TypeDescriptor::Array(member) => FrameType::array(map_frame_type(member)),
        TypeDescriptor::Record(fields) => FrameType::Record(
            fields
                .iter()
                .map(|(n, t)| (n.clone(), map_frame_type(t)))
                .collect(),
        ),
    }
}

/// Validates `item` against `td`, casting atomics to their declared kinds.
pub fn validate_item(item: &Item, td: &TypeDescriptor) -> Result<Item> {
    validate_at(item, td, &mut String::from("$"))
}

fn invalid(path: &str, reason: impl fmt::Display) -> Error {
    err!(ValidationError, "at {path}: {reason}")
}

fn validate_at(item: &Item, td: &TypeDescriptor, path: &mut String) -> Result<Item> {
    match td {
        TypeDescriptor::Atomic(kind) => {
            let Item::Atomic(a) = item else {
                return Err(invalid(path, format!("expected {kind}, got {}", item.type_name())));
            };
            if a.kind() == *kind {
                return Ok(item.clone());
            }
            if a.kind() == AtomicKind::Null {
                return Err(invalid(path, format!("null is not allowed for {kind}")));
            }
            a.cast(*kind)
                .map(Item::Atomic)
                .map_err(|e| invalid(path, e.message))
        }
        TypeDescriptor::Array(member) => {
            let Some(members) = item.as_array() else {
                return Err(invalid(path, format!("expected array, got {}", item.type_name())));
            };
            let mut out = Vec::with_capacity(members.len());
            for (i, m) in members.iter().enumerate() {
                let len = path.len();
                path.push_str(&format!("[{i}]"));
                out.push(validate_at(m, member, path)?);
                path.truncate(len);
            }
            Ok(Item::array(out))
        }
        TypeDescriptor::Record(fields) => {
            let Some(obj) = item.as_object() else {
                return Err(invalid(path, format!("expected object, got {}", item.type_name())));
            };
            let mut out = Object::with_capacity(fields.len());
            for (name, ftd) in fields {
                let len = path.len();
                path.push('.');
                path.push_str(name);
                let Some(value) = obj.get(name) else {
                    return Err(invalid(path, "missing field"));
                };
                out.insert(name.clone(), validate_at(value, ftd, path)?)?;
                path.truncate(len);
            }
            if let Some(extra) = obj.keys().find(|k| !fields.iter().any(|(n, _)| &**n == *k)) {
                path.push('.');
                path.push_str(extra);
                return Err(invalid(path, "field not declared in schema"));
            }
            Ok(Item::object(out))
        }
    }
}

/// Validates every row and stores the result as a frame. Rows are checked
/// in parallel; the error reported is the one at the lowest row index.
pub fn annotate(rows: &[Item], descriptor: &Item) -> Result<Frame> {
    let td = parse_schema(descriptor)?;
    let TypeDescriptor::Record(fields) = &td else {
        bail!(MalformedSchema, "annotate needs an object descriptor, got {td}");
    };
    let validated = validate_rows(rows, &td)?;
    let schema: Schema = fields
        .iter()
        .map(|(n, t)| (n.clone(), map_frame_type(t)))
        .collect();
    Frame::from_items(&validated, schema)
}

/// Validation half of [`annotate`], kept as items.
pub fn validate_rows(rows: &[Item], td: &TypeDescriptor) -> Result<Vec<Item>> {
    let results: Vec<Result<Item>> = rows
        .par_iter()
        .with_min_len(BLOCK_ROWS / 4)
        .enumerate()
        .map(|(i, row)| {
            if !matches!(row, Item::Object(_)) {
                bail!(NonObjectRow, "row {i} is {}, not an object", row.type_name());
            }
            validate_item(row, td).map_err(|e| Error {
                message: format!("row {i}: {}", e.message),
                ..e
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Parses a descriptor read from a JSON file.
pub fn parse_schema_json(text: &str) -> Result<TypeDescriptor> {
    let item = crate::item::parse_json(text)
        .map_err(|e| Error::new(ErrorCode::MalformedSchema, e.message))?;
    parse_schema(&item)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::item::{deep_equal, parse_json, Atomic};
    use proptest::prelude::*;

    fn json(s: &str) -> Item {
        parse_json(s).unwrap()
    }

    #[test]
    fn record_with_nested_features() {
        let mut features = String::from("{");
        for i in 1..=4096 {
            if i > 1 {
                features.push(',');
            }
            features.push_str(&format!("\"{i}\":\"double\""));
        }
        features.push('}');
        let td = parse_schema(&json(&format!(r#"{{"label":"string","features":{features}}}"#))).unwrap();
        let TypeDescriptor::Record(fields) = td else { panic!() };
        assert_eq!(&*fields[0].0, "label");
        assert_eq!(fields[0].1, TypeDescriptor::Atomic(AtomicKind::String));
        let TypeDescriptor::Record(inner) = &fields[1].1 else { panic!() };
        assert_eq!(inner.len(), 4096);
        assert!(inner.iter().all(|(_, t)| *t == TypeDescriptor::Atomic(AtomicKind::Double)));
    }

    #[test]
    fn vector_descriptor() {
        assert_eq!(
            parse_schema(&json(r#"["double"]"#)).unwrap(),
            TypeDescriptor::Array(Box::new(TypeDescriptor::Atomic(AtomicKind::Double)))
        );
    }

    #[test]
    fn descriptor_errors() {
        assert_eq!(parse_schema(&json(r#""quaternion""#)).unwrap_err().code, ErrorCode::UnknownTypeName);
        assert_eq!(parse_schema(&json(r#"["double","string"]"#)).unwrap_err().code, ErrorCode::MalformedSchema);
        assert_eq!(parse_schema(&json("[]")).unwrap_err().code, ErrorCode::MalformedSchema);
        assert_eq!(parse_schema(&json("3")).unwrap_err().code, ErrorCode::MalformedSchema);
    }

    #[test]
    fn mapping_examples() {
        let a = |k| map_frame_type(&TypeDescriptor::Atomic(k));
        assert_eq!(a(AtomicKind::Int), FrameType::Integer);
        assert_eq!(a(AtomicKind::DateTime), FrameType::Timestamp);
        assert_eq!(
            map_frame_type(&parse_schema(&json(r#"["double"]"#)).unwrap()),
            FrameType::array(FrameType::Double)
        );
    }

    #[test]
    fn label_is_cast_to_string() {
        let td = parse_schema(&json(r#"{"label":"string","features":{"1":"double"}}"#)).unwrap();
        let v = validate_item(&json(r#"{"label":1,"features":{"1":"-4.893"}}"#), &td).unwrap();
        assert_eq!(v.to_string(), r#"{"label": "1", "features": {"1": -4.893}}"#);
    }

    #[test]
    fn missing_field_reports_path() {
        let td = parse_schema(&json(r#"{"a":"string","b":"double"}"#)).unwrap();
        let e = validate_item(&json(r#"{"a":"x"}"#), &td).unwrap_err();
        assert_eq!(e.code, ErrorCode::ValidationError);
        assert!(e.message.contains("$.b"), "{}", e.message);
        assert!(e.message.contains("missing"), "{}", e.message);
    }

    #[test]
    fn extra_field_rejected() {
        let td = parse_schema(&json(r#"{"a":"string"}"#)).unwrap();
        let e = validate_item(&json(r#"{"a":"x","z":1}"#), &td).unwrap_err();
        assert!(e.message.contains("$.z"), "{}", e.message);
    }

    #[test]
    fn string_to_double() {
        let td = TypeDescriptor::Atomic(AtomicKind::Double);
        let v = validate_item(&Item::string("3.5"), &td).unwrap();
        assert!(matches!(v, Item::Atomic(Atomic::Double(x)) if x == 3.5));
    }

    #[test]
    fn null_only_for_null_kind() {
        let e = validate_item(&Item::null(), &TypeDescriptor::Atomic(AtomicKind::String)).unwrap_err();
        assert_eq!(e.code, ErrorCode::ValidationError);
        assert!(validate_item(&Item::null(), &TypeDescriptor::Atomic(AtomicKind::Null)).is_ok());
    }

    #[test]
    fn annotate_builds_frame() {
        let rows = vec![
            json(r#"{"label":0,"features":{"1":"-4.893","2":"-3.803"}}"#),
            json(r#"{"label":1,"features":{"1":"-8.311","2":"15.133"}}"#),
        ];
        let schema = json(r#"{"label":"string","features":{"1":"double","2":"double"}}"#);
        let f = annotate(&rows, &schema).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.schema()[0].1, FrameType::String);
        assert_eq!(
            f.schema()[1].1,
            FrameType::Record(vec![(Arc::from("1"), FrameType::Double), (Arc::from("2"), FrameType::Double)])
        );
        assert_eq!(f.row(1).to_string(), r#"{"label": "1", "features": {"1": -8.311, "2": 15.133}}"#);
    }

    #[test]
    fn annotate_empty_and_non_objects() {
        let schema = json(r#"{"a":"double"}"#);
        let f = annotate(&[], &schema).unwrap();
        assert!(f.is_empty());
        assert_eq!(f.schema().len(), 1);
        let e = annotate(&[Item::integer(1), Item::integer(2)], &schema).unwrap_err();
        assert_eq!(e.code, ErrorCode::NonObjectRow);
    }

    #[test]
    fn lowest_row_error_wins() {
        let schema = json(r#"{"a":"double"}"#);
        let mut rows: Vec<Item> = (0..5000).map(|i| json(&format!(r#"{{"a":{i}}}"#))).collect();
        rows[4000] = json(r#"{"a":"x"}"#);
        rows[1234] = json(r#"{"a":"y"}"#);
        let e = annotate(&rows, &schema).unwrap_err();
        assert!(e.message.starts_with("row 1234:"), "{}", e.message);
    }

    fn arb_descriptor() -> impl Strategy<Value = TypeDescriptor> {
        let leaf = prop_oneof![
            Just(TypeDescriptor::Atomic(AtomicKind::Double)),
            Just(TypeDescriptor::Atomic(AtomicKind::String)),
            Just(TypeDescriptor::Atomic(AtomicKind::Int)),
            Just(TypeDescriptor::Atomic(AtomicKind::Boolean)),
            Just(TypeDescriptor::Atomic(AtomicKind::Decimal)),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|t| TypeDescriptor::Array(Box::new(t))),
                prop::collection::vec(inner, 1..4).prop_map(|ts| TypeDescriptor::Record(
                    ts.into_iter().enumerate().map(|(i, t)| (Arc::from(format!("k{i}")), t)).collect()
                )),
            ]
        })
    }

    /// Raw (unvalidated) values: numbers arrive as strings or integers.
    fn arb_raw(td: TypeDescriptor) -> BoxedStrategy<Item> {
        match td {
            TypeDescriptor::Atomic(AtomicKind::Double) => prop_oneof![
                (-1000i64..1000).prop_map(Item::integer),
                (-1e6f64..1e6).prop_map(|v| Item::string(format!("{v}"))),
            ]
            .boxed(),
            TypeDescriptor::Atomic(AtomicKind::String) => prop_oneof![
                "[a-z]{0,4}".prop_map(Item::string),
                (-50i64..50).prop_map(Item::integer),
            ]
            .boxed(),
            TypeDescriptor::Atomic(AtomicKind::Int) => prop_oneof![
                (-1000i64..1000).prop_map(Item::integer),
                (-1000i64..1000).prop_map(|v| Item::string(v.to_string())),
            ]
            .boxed(),
            TypeDescriptor::Atomic(AtomicKind::Boolean) => prop_oneof![
                any::<bool>().prop_map(Item::boolean),
                any::<bool>().prop_map(|b| Item::string(b.to_string())),
            ]
            .boxed(),
            TypeDescriptor::Atomic(_) => (-1000i64..1000, 0i64..4)
                .prop_map(|(m, s)| Item::string(bigdecimal::BigDecimal::new(m.into(), s).to_string()))
                .boxed(),
            TypeDescriptor::Array(m) => prop::collection::vec(arb_raw(*m), 0..3).prop_map(Item::array).boxed(),
            TypeDescriptor::Record(fields) => {
                let names: Vec<Arc<str>> = fields.iter().map(|(n, _)| n.clone()).collect();
                let vals: Vec<BoxedStrategy<Item>> = fields.into_iter().map(|(_, t)| arb_raw(t)).collect();
                vals.prop_map(move |vs| Item::object(Object::from_pairs(names.iter().cloned().zip(vs)).unwrap()))
                    .boxed()
            }
        }
    }

    fn to_item(td: &TypeDescriptor) -> Item {
        match td {
            TypeDescriptor::Atomic(k) => Item::string(k.name()),
            TypeDescriptor::Array(m) => Item::array(vec![to_item(m)]),
            TypeDescriptor::Record(fields) => Item::object(
                Object::from_pairs(fields.iter().map(|(n, t)| (n.clone(), to_item(t)))).unwrap(),
            ),
        }
    }

    fn arb_case() -> impl Strategy<Value = (TypeDescriptor, Vec<Item>)> {
        prop::collection::vec(arb_descriptor(), 1..4).prop_flat_map(|ts| {
            let td = TypeDescriptor::Record(
                ts.into_iter().enumerate().map(|(i, t)| (Arc::from(format!("c{i}")), t)).collect(),
            );
            (Just(td.clone()), prop::collection::vec(arb_raw(td), 0..8))
        })
    }

    proptest! {
        #[test]
        fn frame_storage_is_invisible((td, rows) in arb_case()) {
            let frame = annotate(&rows, &to_item(&td)).unwrap();
            prop_assert_eq!(frame.len(), rows.len());
            for (row, stored) in rows.iter().zip(frame.rows()) {
                let validated = validate_item(row, &td).unwrap();
                prop_assert!(deep_equal(&validated, &stored), "{:?} vs {:?}", validated, stored);
            }
        }

        #[test]
        fn validation_is_idempotent((td, rows) in arb_case()) {
            for row in &rows {
                let once = validate_item(row, &td).unwrap();
                let twice = validate_item(&once, &td).unwrap();
                prop_assert_eq!(once.to_string(), twice.to_string());
            }
        }

        #[test]
        fn descriptors_round_trip(td in arb_descriptor()) {
            prop_assert_eq!(parse_schema(&to_item(&td)).unwrap(), td);
        }
    }
}
