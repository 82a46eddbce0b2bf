use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use bigdecimal::BigDecimal;
use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use num_bigint::BigInt;
use num_traits::{FromPrimitive, ToPrimitive, Zero};

use crate::error::{bail, err, Result};

/// The atomic kinds understood by the engine. Every kind maps to a frame
/// column type (see [`crate::schema::map_frame_type`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomicKind {
    String,
    Boolean,
    Null,
    Byte,
    Short,
    Int,
    Integer,
    Long,
    Decimal,
    Double,
    Float,
    Date,
    DateTime,
    HexBinary,
}

impl AtomicKind {
    pub const ALL: [AtomicKind; 14] = [
        AtomicKind::String,
        AtomicKind::Boolean,
        AtomicKind::Null,
        AtomicKind::Byte,
        AtomicKind::Short,
        AtomicKind::Int,
        AtomicKind::Integer,
        AtomicKind::Long,
        AtomicKind::Decimal,
        AtomicKind::Double,
        AtomicKind::Float,
        AtomicKind::Date,
        AtomicKind::DateTime,
        AtomicKind::HexBinary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AtomicKind::String => "string",
            AtomicKind::Boolean => "boolean",
            AtomicKind::Null => "null",
            AtomicKind::Byte => "byte",
            AtomicKind::Short => "short",
            AtomicKind::Int => "int",
            AtomicKind::Integer => "integer",
            AtomicKind::Long => "long",
            AtomicKind::Decimal => "decimal",
            AtomicKind::Double => "double",
            AtomicKind::Float => "float",
            AtomicKind::Date => "date",
            AtomicKind::DateTime => "dateTime",
            AtomicKind::HexBinary => "hexBinary",
        }
    }

    pub fn from_name(name: &str) -> Option<AtomicKind> {
        AtomicKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    pub fn is_integer_family(self) -> bool {
        matches!(
            self,
            AtomicKind::Byte
                | AtomicKind::Short
                | AtomicKind::Int
                | AtomicKind::Integer
                | AtomicKind::Long
        )
    }

    pub fn is_numeric(self) -> bool {
        self.is_integer_family()
            || matches!(
                self,
                AtomicKind::Decimal | AtomicKind::Double | AtomicKind::Float
            )
    }
}

impl fmt::Display for AtomicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An atomic value. The payload is always within the range of its kind.
#[derive(Debug, Clone)]
pub enum Atomic {
    String(Arc<str>),
    Boolean(bool),
    Null,
    Byte(i8),
    Short(i16),
    Int(i32),
    Integer(BigInt),
    Long(i64),
    Decimal(BigDecimal),
    Double(f64),
    Float(f32),
    Date(NaiveDate),
    DateTime(NaiveDateTime),
    HexBinary(Arc<[u8]>),
}

/// A numeric value after type promotion.
#[derive(Debug, Clone)]
pub(crate) enum Num {
    Integer(BigInt),
    Decimal(BigDecimal),
    Float(f32),
    Double(f64),
}

impl Num {
    pub(crate) fn rank(&self) -> u8 {
        match self {
            Num::Integer(_) => 0,
            Num::Decimal(_) => 1,
            Num::Float(_) => 2,
            Num::Double(_) => 3,
        }
    }

    pub(crate) fn to_f64(&self) -> f64 {
        match self {
            Num::Integer(i) => i.to_f64().unwrap_or(f64::NAN),
            Num::Decimal(d) => d.to_f64().unwrap_or(f64::NAN),
            Num::Float(f) => *f as f64,
            Num::Double(d) => *d,
        }
    }

    pub(crate) fn to_decimal(&self) -> Option<BigDecimal> {
        match self {
            Num::Integer(i) => Some(BigDecimal::from(i.clone())),
            Num::Decimal(d) => Some(d.clone()),
            Num::Float(f) => decimal_from_f64(*f as f64),
            Num::Double(d) => decimal_from_f64(*d),
        }
    }
}

fn decimal_from_f64(v: f64) -> Option<BigDecimal> {
    if !v.is_finite() {
        return None;
    }
    let mut buf = ryu::Buffer::new();
    BigDecimal::from_str(buf.format_finite(v)).ok()
}

impl Atomic {
    pub fn kind(&self) -> AtomicKind {
        match self {
            Atomic::String(_) => AtomicKind::String,
            Atomic::Boolean(_) => AtomicKind::Boolean,
            Atomic::Null => AtomicKind::Null,
            Atomic::Byte(_) => AtomicKind::Byte,
            Atomic::Short(_) => AtomicKind::Short,
            Atomic::Int(_) => AtomicKind::Int,
            Atomic::Integer(_) => AtomicKind::Integer,
            Atomic::Long(_) => AtomicKind::Long,
            Atomic::Decimal(_) => AtomicKind::Decimal,
            Atomic::Double(_) => AtomicKind::Double,
            Atomic::Float(_) => AtomicKind::Float,
            Atomic::Date(_) => AtomicKind::Date,
            Atomic::DateTime(_) => AtomicKind::DateTime,
            Atomic::HexBinary(_) => AtomicKind::HexBinary,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.kind().is_numeric()
    }

    pub(crate) fn as_num(&self) -> Option<Num> {
        Some(match self {
            Atomic::Byte(v) => Num::Integer(BigInt::from(*v)),
            Atomic::Short(v) => Num::Integer(BigInt::from(*v)),
            Atomic::Int(v) => Num::Integer(BigInt::from(*v)),
            Atomic::Long(v) => Num::Integer(BigInt::from(*v)),
            Atomic::Integer(v) => Num::Integer(v.clone()),
            Atomic::Decimal(v) => Num::Decimal(v.clone()),
            Atomic::Float(v) => Num::Float(*v),
            Atomic::Double(v) => Num::Double(*v),
            _ => return None,
        })
    }

    /// Numeric value widened to `f64`, if the value is numeric.
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Atomic::Double(v) => Some(*v),
            Atomic::Float(v) => Some(*v as f64),
            Atomic::Int(v) => Some(*v as f64),
            Atomic::Long(v) => Some(*v as f64),
            Atomic::Short(v) => Some(*v as f64),
            Atomic::Byte(v) => Some(*v as f64),
            _ => self.as_num().map(|n| n.to_f64()),
        }
    }

    /// Integer-family value as `i64`, if it fits.
    pub fn to_i64(&self) -> Option<i64> {
        match self {
            Atomic::Byte(v) => Some(*v as i64),
            Atomic::Short(v) => Some(*v as i64),
            Atomic::Int(v) => Some(*v as i64),
            Atomic::Long(v) => Some(*v),
            Atomic::Integer(v) => v.to_i64(),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Atomic::String(s) => Some(s),
            _ => None,
        }
    }

    /// The lexical string form used by `string()` and by casts to string.
    pub fn lexical(&self) -> String {
        match self {
            Atomic::String(s) => s.to_string(),
            Atomic::Boolean(b) => b.to_string(),
            Atomic::Null => "null".to_string(),
            Atomic::Byte(v) => v.to_string(),
            Atomic::Short(v) => v.to_string(),
            Atomic::Int(v) => v.to_string(),
            Atomic::Integer(v) => v.to_string(),
            Atomic::Long(v) => v.to_string(),
            Atomic::Decimal(v) => decimal_lexical(v),
            Atomic::Double(v) => double_lexical(*v),
            Atomic::Float(v) => double_lexical(*v as f64),
            Atomic::Date(d) => d.format("%Y-%m-%d").to_string(),
            Atomic::DateTime(dt) => datetime_lexical(dt),
            Atomic::HexBinary(b) => hex::encode_upper(b),
        }
    }

    /// Converts this value to `target` following the cast rules.
    pub fn cast(&self, target: AtomicKind) -> Result<Atomic> {
        if self.kind() == target {
            return Ok(self.clone());
        }
        if target == AtomicKind::String {
            return Ok(Atomic::String(self.lexical().into()));
        }
        match self {
            Atomic::String(s) => cast_from_string(s, target),
            Atomic::Null => bail!(NoCastRule, "cannot cast null to {target}"),
            Atomic::Boolean(b) => {
                if target.is_numeric() {
                    Atomic::Integer(BigInt::from(*b as u8)).cast(target)
                } else {
                    bail!(NoCastRule, "cannot cast boolean to {target}")
                }
            }
            Atomic::Date(d) if target == AtomicKind::DateTime => {
                Ok(Atomic::DateTime(d.and_time(NaiveTime::MIN)))
            }
            Atomic::DateTime(dt) if target == AtomicKind::Date => Ok(Atomic::Date(dt.date())),
            _ if self.is_numeric() => cast_numeric(self.as_num().expect("numeric"), target),
            _ => bail!(NoCastRule, "cannot cast {} to {target}", self.kind()),
        }
    }
}

fn cast_numeric(num: Num, target: AtomicKind) -> Result<Atomic> {
    match target {
        AtomicKind::Boolean => Ok(Atomic::Boolean(match &num {
            Num::Integer(i) => !i.is_zero(),
            Num::Decimal(d) => !d.is_zero(),
            other => {
                let v = other.to_f64();
                v != 0.0 && !v.is_nan()
            }
        })),
        AtomicKind::Double => Ok(Atomic::Double(num.to_f64())),
        AtomicKind::Float => Ok(Atomic::Float(num.to_f64() as f32)),
        AtomicKind::Decimal => num
            .to_decimal()
            .map(Atomic::Decimal)
            .ok_or_else(|| err!(RangeError, "{} is not a finite decimal", num.to_f64())),
        k if k.is_integer_family() => {
            let int = match num {
                Num::Integer(i) => i,
                Num::Decimal(d) => truncate_decimal(&d),
                other => {
                    let v = other.to_f64();
                    if !v.is_finite() {
                        bail!(RangeError, "cannot cast {v} to {k}");
                    }
                    BigInt::from_f64(v.trunc()).expect("finite")
                }
            };
            integer_to_kind(int, k)
        }
        _ => bail!(NoCastRule, "cannot cast number to {target}"),
    }
}

fn truncate_decimal(d: &BigDecimal) -> BigInt {
    d.with_scale_round(0, bigdecimal::RoundingMode::Down)
        .into_bigint_and_exponent()
        .0
}

fn integer_to_kind(int: BigInt, kind: AtomicKind) -> Result<Atomic> {
    let out_of_range = || err!(RangeError, "{int} is out of range for {kind}");
    Ok(match kind {
        AtomicKind::Integer => return Ok(Atomic::Integer(int)),
        AtomicKind::Byte => Atomic::Byte(int.to_i8().ok_or_else(out_of_range)?),
        AtomicKind::Short => Atomic::Short(int.to_i16().ok_or_else(out_of_range)?),
        AtomicKind::Int => Atomic::Int(int.to_i32().ok_or_else(out_of_range)?),
        AtomicKind::Long => Atomic::Long(int.to_i64().ok_or_else(out_of_range)?),
        _ => unreachable!("not an integer kind"),
    })
}

fn is_integer_lexical(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_decimal_lexical(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits) && (int.len() + frac.map_or(0, str::len)) > 0
}

fn is_double_lexical(s: &str) -> bool {
    match s.find(['e', 'E']) {
        Some(idx) => is_decimal_lexical(&s[..idx]) && is_integer_lexical(&s[idx + 1..]),
        None => is_decimal_lexical(s),
    }
}

fn parse_double(s: &str) -> Option<f64> {
    match s {
        "NaN" => Some(f64::NAN),
        "INF" | "+INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        _ if is_double_lexical(s) => s.parse().ok(),
        _ => None,
    }
}

fn cast_from_string(raw: &str, target: AtomicKind) -> Result<Atomic> {
    let s = raw.trim();
    let lexical = || err!(LexicalError, "{raw:?} is not a valid {target}");
    match target {
        AtomicKind::Boolean => match s {
            "true" | "1" => Ok(Atomic::Boolean(true)),
            "false" | "0" => Ok(Atomic::Boolean(false)),
            _ => Err(lexical()),
        },
        AtomicKind::Null => match s {
            "null" => Ok(Atomic::Null),
            _ => Err(lexical()),
        },
        AtomicKind::Double => parse_double(s).map(Atomic::Double).ok_or_else(lexical),
        AtomicKind::Float => parse_double(s)
            .map(|v| Atomic::Float(v as f32))
            .ok_or_else(lexical),
        AtomicKind::Decimal => {
            if !is_decimal_lexical(s) {
                return Err(lexical());
            }
            BigDecimal::from_str(s)
                .map(Atomic::Decimal)
                .map_err(|_| lexical())
        }
        k if k.is_integer_family() => {
            if !is_integer_lexical(s) {
                return Err(lexical());
            }
            let int = BigInt::from_str(s.strip_prefix('+').unwrap_or(s)).map_err(|_| lexical())?;
            integer_to_kind(int, k)
        }
        AtomicKind::Date => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Atomic::Date)
            .map_err(|_| lexical()),
        AtomicKind::DateTime => NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
            .map(Atomic::DateTime)
            .map_err(|_| lexical()),
        AtomicKind::HexBinary => hex::decode(s)
            .map(|b| Atomic::HexBinary(b.into()))
            .map_err(|_| lexical()),
        AtomicKind::String => Ok(Atomic::String(raw.into())),
        _ => unreachable!("all kinds covered"),
    }
}

pub(crate) fn decimal_lexical(d: &BigDecimal) -> String {
    let normalized = d.normalized();
    if normalized.is_zero() {
        return "0".to_string();
    }
    normalized.to_plain_string()
}

/// Integral doubles below 1e15 print without a fraction; everything else
/// uses the shortest round-trip form.
pub(crate) fn double_lexical(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "INF" } else { "-INF" }.to_string()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        ryu::Buffer::new().format_finite(v).to_string()
    }
}

fn datetime_lexical(dt: &NaiveDateTime) -> String {
    if dt.and_utc().timestamp_subsec_nanos() == 0 {
        dt.format("%Y-%m-%dT%H:%M:%S").to_string()
    } else {
        dt.format("%Y-%m-%dT%H:%M:%S%.f").to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorCode;

    fn s(v: &str) -> Atomic {
        Atomic::String(v.into())
    }

    #[test]
    fn string_to_double_matches_messy_token() {
        match s("-4.893").cast(AtomicKind::Double).unwrap() {
            Atomic::Double(v) => assert_eq!(v, -4.893),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integer_to_string() {
        let one = Atomic::Integer(BigInt::from(1));
        assert_eq!(one.cast(AtomicKind::String).unwrap().as_str(), Some("1"));
    }

    #[test]
    fn bad_double_lexical() {
        let e = s("abc").cast(AtomicKind::Double).unwrap_err();
        assert_eq!(e.code, ErrorCode::LexicalError);
        for bad in ["inf", "infinity", "nan", "1e", ".", "", "1.2.3", "0x10"] {
            assert_eq!(
                s(bad).cast(AtomicKind::Double).unwrap_err().code,
                ErrorCode::LexicalError,
                "{bad}"
            );
        }
    }

    #[test]
    fn special_doubles_only_from_exact_names() {
        assert!(matches!(s("NaN").cast(AtomicKind::Double), Ok(Atomic::Double(v)) if v.is_nan()));
        assert!(matches!(s("-INF").cast(AtomicKind::Double), Ok(Atomic::Double(v)) if v == f64::NEG_INFINITY));
        assert!(matches!(s("1e3").cast(AtomicKind::Double), Ok(Atomic::Double(v)) if v == 1000.0));
        assert!(matches!(s(".5").cast(AtomicKind::Double), Ok(Atomic::Double(v)) if v == 0.5));
    }

    #[test]
    fn narrowing_range_errors() {
        let big = Atomic::Integer(BigInt::from(128));
        assert_eq!(big.cast(AtomicKind::Byte).unwrap_err().code, ErrorCode::RangeError);
        assert!(matches!(
            Atomic::Integer(BigInt::from(-128)).cast(AtomicKind::Byte),
            Ok(Atomic::Byte(-128))
        ));
        assert_eq!(
            Atomic::Double(f64::NAN).cast(AtomicKind::Int).unwrap_err().code,
            ErrorCode::RangeError
        );
        assert!(matches!(Atomic::Double(-2.7).cast(AtomicKind::Long), Ok(Atomic::Long(-2))));
        assert_eq!(s("70000").cast(AtomicKind::Short).unwrap_err().code, ErrorCode::RangeError);
        assert_eq!(s("1.0").cast(AtomicKind::Int).unwrap_err().code, ErrorCode::LexicalError);
    }

    #[test]
    fn no_cast_rules() {
        assert_eq!(Atomic::Null.cast(AtomicKind::Double).unwrap_err().code, ErrorCode::NoCastRule);
        let d = s("2021-03-04").cast(AtomicKind::Date).unwrap();
        assert_eq!(d.cast(AtomicKind::Double).unwrap_err().code, ErrorCode::NoCastRule);
        assert_eq!(d.lexical(), "2021-03-04");
    }

    #[test]
    fn dates_and_binary() {
        let dt = s("2021-03-04T05:06:07").cast(AtomicKind::DateTime).unwrap();
        assert_eq!(dt.lexical(), "2021-03-04T05:06:07");
        assert_eq!(
            s("2021-03-04T05:06:07Z").cast(AtomicKind::DateTime).unwrap_err().code,
            ErrorCode::LexicalError
        );
        let bin = s("0aff").cast(AtomicKind::HexBinary).unwrap();
        assert_eq!(bin.lexical(), "0AFF");
    }

    #[test]
    fn double_lexical_forms() {
        assert_eq!(double_lexical(1.0), "1");
        assert_eq!(double_lexical(-4.893), "-4.893");
        assert_eq!(double_lexical(1e300), "1e300");
        assert_eq!(double_lexical(f64::NEG_INFINITY), "-INF");
    }
}
