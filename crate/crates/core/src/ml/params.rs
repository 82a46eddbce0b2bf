//! Parameter specifications and validation.
//!
//! Each parameter has a native type from the estimator/transformer API and
//! is passed as the item type that native type maps to.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{bail, err, Result};
use crate::item::{Atomic, FunctionItem, Item, Object};

/// Native parameter type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Boolean,
    DoubleMatrix,
    DoubleArray,
    Double,
    Float,
    IntArray,
    Int,
    Long,
    StringArray,
    String,
    Matrix,
    Vector,
    Transformer,
    Estimator,
    /// Pipeline stages: transformers and estimators in any mix.
    StageArray,
}

impl ParamKind {
    pub const ALL: &'static [ParamKind] = &[
        ParamKind::Boolean,
        ParamKind::DoubleMatrix,
        ParamKind::DoubleArray,
        ParamKind::Double,
        ParamKind::Float,
        ParamKind::IntArray,
        ParamKind::Int,
        ParamKind::Long,
        ParamKind::StringArray,
        ParamKind::String,
        ParamKind::Matrix,
        ParamKind::Vector,
        ParamKind::Transformer,
        ParamKind::Estimator,
        ParamKind::StageArray,
    ];

    pub fn native_name(self) -> &'static str {
        match self {
            ParamKind::Boolean => "boolean",
            ParamKind::DoubleMatrix => "double[][]",
            ParamKind::DoubleArray => "double[]",
            ParamKind::Double => "double",
            ParamKind::Float => "float",
            ParamKind::IntArray => "int[]",
            ParamKind::Int => "int",
            ParamKind::Long => "long",
            ParamKind::StringArray => "String[]",
            ParamKind::String => "String",
            ParamKind::Matrix => "Matrix",
            ParamKind::Vector => "Vector",
            ParamKind::Transformer => "Transformer",
            ParamKind::Estimator => "Estimator",
            ParamKind::StageArray => "PipelineStage[]",
        }
    }

    /// The item type accepted for this native type.
    pub fn item_type(self) -> &'static str {
        match self {
            ParamKind::Boolean => "boolean",
            ParamKind::DoubleMatrix | ParamKind::Matrix => "[ [ \"double\" ] ]",
            ParamKind::DoubleArray | ParamKind::Vector => "[ \"double\" ]",
            ParamKind::Double | ParamKind::Float | ParamKind::Long => "double",
            ParamKind::IntArray => "[ \"integer\" ]",
            ParamKind::Int => "integer",
            ParamKind::StringArray => "[ \"string\" ]",
            ParamKind::String => "string",
            ParamKind::Transformer => "function(object*, object) as object*",
            ParamKind::Estimator => "function(object*, object) as function(object*, object) as object*",
            ParamKind::StageArray => "[ function(object*, object) as item* ]",
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.item_type())
    }
}

#[derive(Debug, Clone)]
pub enum ParamValue {
    Boolean(bool),
    Double(f64),
    Int(i64),
    String(String),
    Doubles(Vec<f64>),
    DoubleMatrix(Vec<Vec<f64>>),
    Ints(Vec<i64>),
    Strings(Vec<String>),
    Function(Arc<FunctionItem>),
    Functions(Vec<Arc<FunctionItem>>),
}

impl PartialEq for ParamValue {
    fn eq(&self, other: &Self) -> bool {
        use ParamValue::*;
        match (self, other) {
            (Boolean(a), Boolean(b)) => a == b,
            (Double(a), Double(b)) => a.to_bits() == b.to_bits(),
            (Int(a), Int(b)) => a == b,
            (String(a), String(b)) => a == b,
            (Doubles(a), Doubles(b)) => a == b,
            (DoubleMatrix(a), DoubleMatrix(b)) => a == b,
            (Ints(a), Ints(b)) => a == b,
            (Strings(a), Strings(b)) => a == b,
            (Function(a), Function(b)) => Arc::ptr_eq(a, b),
            (Functions(a), Functions(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| Arc::ptr_eq(x, y)),
            _ => false,
        }
    }
}

impl ParamValue {
    /// Back to an item. Function-valued parameters have no stored form.
    pub fn to_item(&self) -> Item {
        let doubles = |v: &[f64]| Item::array(v.iter().map(|x| Item::double(*x)).collect());
        match self {
            ParamValue::Boolean(b) => Item::boolean(*b),
            ParamValue::Double(v) => Item::double(*v),
            ParamValue::Int(v) => Item::integer(*v),
            ParamValue::String(s) => Item::string(s.as_str()),
            ParamValue::Doubles(v) => doubles(v),
            ParamValue::DoubleMatrix(rows) => Item::array(rows.iter().map(|r| doubles(r)).collect()),
            ParamValue::Ints(v) => Item::array(v.iter().map(|x| Item::integer(*x)).collect()),
            ParamValue::Strings(v) => Item::array(v.iter().map(|s| Item::string(s.as_str())).collect()),
            ParamValue::Function(f) => Item::Function(f.clone()),
            ParamValue::Functions(fs) => Item::array(fs.iter().map(|f| Item::Function(f.clone())).collect()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: Option<ParamValue>,
}

fn p(name: &'static str, kind: ParamKind, default: Option<ParamValue>) -> ParamSpec {
    ParamSpec { name, kind, default }
}

fn s(v: &str) -> Option<ParamValue> {
    Some(ParamValue::String(v.to_string()))
}

fn common_predictor() -> Vec<ParamSpec> {
    use ParamKind::*;
    vec![
        p("featuresCol", String, s("features")),
        p("labelCol", String, s("label")),
        p("predictionCol", String, s("prediction")),
    ]
}

fn gradient_descent() -> Vec<ParamSpec> {
    use ParamKind::*;
    vec![
        p("maxIter", Int, Some(ParamValue::Int(10))),
        p("stepSize", Double, Some(ParamValue::Double(0.1))),
        p("regParam", Double, Some(ParamValue::Double(0.0))),
        p("fitIntercept", Boolean, Some(ParamValue::Boolean(true))),
    ]
}

/// Parameter specifications of a registered estimator, transformer, or
/// fitted model kind.
pub fn specs_for(name: &str) -> Option<Vec<ParamSpec>> {
    use ParamKind::*;
    Some(match name {
        "Tokenizer" => vec![p("inputCol", String, None), p("outputCol", String, None)],
        "VectorAssembler" => vec![p("inputCols", StringArray, None), p("outputCol", String, None)],
        "VectorSlicer" => vec![
            p("inputCol", String, None),
            p("outputCol", String, None),
            p("indices", IntArray, Some(ParamValue::Ints(Vec::new()))),
        ],
        "LogisticRegression" | "LogisticRegressionModel" => {
            let mut v = common_predictor();
            v.extend(gradient_descent());
            v.extend([
                p("lowerBoundsOnCoefficients", Matrix, None),
                p("upperBoundsOnCoefficients", Matrix, None),
                p("lowerBoundsOnIntercepts", Vector, None),
                p("upperBoundsOnIntercepts", Vector, None),
            ]);
            v
        }
        "LinearSVC" | "LinearSVCModel" => {
            let mut v = common_predictor();
            v.extend(gradient_descent());
            v
        }
        "NaiveBayes" | "NaiveBayesModel" => {
            let mut v = common_predictor();
            v.extend([
                p("smoothing", Double, Some(ParamValue::Double(1.0))),
                p("thresholds", DoubleArray, None),
            ]);
            v
        }
        "MaxAbsScaler" | "MaxAbsScalerModel" => vec![p("inputCol", String, None), p("outputCol", String, None)],
        "Pipeline" => vec![p("stages", StageArray, None)],
        "PipelineModel" => vec![],
        _ => return None,
    })
}

/// Validated parameters in specification order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamMap {
    values: IndexMap<&'static str, ParamValue>,
}

impl ParamMap {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }

    pub(crate) fn set(&mut self, name: &'static str, value: ParamValue) {
        self.values.insert(name, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &ParamValue)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require(&self, name: &str) -> Result<&ParamValue> {
        self.values
            .get(name)
            .ok_or_else(|| err!(MissingParam, "parameter {name:?} must be set"))
    }

    pub fn string(&self, name: &str) -> Result<&str> {
        match self.require(name)? {
            ParamValue::String(s) => Ok(s),
            other => panic!("parameter {name} holds {other:?}, not a string"),
        }
    }

    pub fn strings(&self, name: &str) -> Result<&[String]> {
        match self.require(name)? {
            ParamValue::Strings(s) => Ok(s),
            other => panic!("parameter {name} holds {other:?}, not strings"),
        }
    }

    pub fn double(&self, name: &str) -> Result<f64> {
        match self.require(name)? {
            ParamValue::Double(v) => Ok(*v),
            other => panic!("parameter {name} holds {other:?}, not a double"),
        }
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        match self.require(name)? {
            ParamValue::Int(v) => Ok(*v),
            other => panic!("parameter {name} holds {other:?}, not an int"),
        }
    }

    pub fn boolean(&self, name: &str) -> Result<bool> {
        match self.require(name)? {
            ParamValue::Boolean(v) => Ok(*v),
            other => panic!("parameter {name} holds {other:?}, not a boolean"),
        }
    }

    pub fn doubles(&self, name: &str) -> Option<&[f64]> {
        match self.values.get(name)? {
            ParamValue::Doubles(v) => Some(v),
            _ => None,
        }
    }

    pub fn matrix(&self, name: &str) -> Option<&[Vec<f64>]> {
        match self.values.get(name)? {
            ParamValue::DoubleMatrix(v) => Some(v),
            _ => None,
        }
    }

    pub fn ints(&self, name: &str) -> Result<&[i64]> {
        match self.require(name)? {
            ParamValue::Ints(v) => Ok(v),
            other => panic!("parameter {name} holds {other:?}, not ints"),
        }
    }

    pub fn functions(&self, name: &str) -> Result<&[Arc<FunctionItem>]> {
        match self.require(name)? {
            ParamValue::Functions(v) => Ok(v),
            other => panic!("parameter {name} holds {other:?}, not functions"),
        }
    }

    /// Parameters with a stored form, as an object.
    pub fn to_object(&self) -> Object {
        let mut obj = Object::new();
        for (k, v) in &self.values {
            if !matches!(v, ParamValue::Function(_) | ParamValue::Functions(_)) {
                obj.insert(*k, v.to_item()).expect("parameter names are unique");
            }
        }
        obj
    }
}

fn describe(item: &Item) -> String {
    match item {
        Item::Array(members) => match members.first() {
            Some(m) => format!("array of {}", describe(m)),
            None => "empty array".to_string(),
        },
        other => other.type_name().to_string(),
    }
}

fn numeric(item: &Item) -> Option<f64> {
    match item {
        Item::Atomic(a) if a.is_numeric() => a.to_f64(),
        _ => None,
    }
}

fn integer(item: &Item) -> Option<i64> {
    match item {
        Item::Atomic(a) if a.kind().is_integer_family() => a.to_i64(),
        _ => None,
    }
}

fn string(item: &Item) -> Option<String> {
    match item {
        Item::Atomic(Atomic::String(s)) => Some(s.to_string()),
        _ => None,
    }
}

fn members<T>(item: &Item, f: impl Fn(&Item) -> Option<T>) -> Option<Vec<T>> {
    item.as_array()?.iter().map(f).collect()
}

fn transformer(item: &Item) -> Option<Arc<FunctionItem>> {
    let f = item.as_function()?;
    (f.arity() == 2 && !f.signature.is_estimator_shaped()).then(|| f.clone())
}

fn estimator(item: &Item) -> Option<Arc<FunctionItem>> {
    let f = item.as_function()?;
    f.signature.is_estimator_shaped().then(|| f.clone())
}

/// Converts an item to the native value of `kind`.
pub fn convert_param(name: &str, kind: ParamKind, item: &Item) -> Result<ParamValue> {
    let converted = match kind {
        ParamKind::Boolean => match item {
            Item::Atomic(Atomic::Boolean(b)) => Some(ParamValue::Boolean(*b)),
            _ => None,
        },
        ParamKind::Double | ParamKind::Float => numeric(item).map(ParamValue::Double),
        ParamKind::Long => numeric(item)
            .filter(|v| v.fract() == 0.0 && v.abs() < 9.2e18)
            .map(|v| ParamValue::Int(v as i64)),
        ParamKind::Int => integer(item)
            .filter(|v| i32::try_from(*v).is_ok())
            .map(ParamValue::Int),
        ParamKind::String => string(item).map(ParamValue::String),
        ParamKind::DoubleArray | ParamKind::Vector => members(item, numeric).map(ParamValue::Doubles),
        ParamKind::DoubleMatrix | ParamKind::Matrix => {
            members(item, |row| members(row, numeric)).and_then(|rows: Vec<Vec<f64>>| {
                let rectangular = rows.windows(2).all(|w| w[0].len() == w[1].len());
                (kind == ParamKind::DoubleMatrix || rectangular).then_some(ParamValue::DoubleMatrix(rows))
            })
        }
        ParamKind::IntArray => members(item, |m| integer(m).filter(|v| i32::try_from(*v).is_ok())).map(ParamValue::Ints),
        ParamKind::StringArray => members(item, string).map(ParamValue::Strings),
        ParamKind::Transformer => transformer(item).map(ParamValue::Function),
        ParamKind::Estimator => estimator(item).map(ParamValue::Function),
        ParamKind::StageArray => members(item, |m| {
            let f = m.as_function()?;
            (f.arity() == 2).then(|| f.clone())
        })
        .map(ParamValue::Functions),
    };
    match converted {
        Some(v) => Ok(v),
        None => bail!(
            ParamTypeError,
            "parameter {name:?} expects {}, got {}",
            kind.item_type(),
            describe(item)
        ),
    }
}

/// Checks `params` against the specification of `owner`, layered over
/// `base` (the defaults when `None`).
pub fn validate_params(owner: &str, params: &Object, base: Option<&ParamMap>) -> Result<ParamMap> {
    let specs = specs_for(owner).unwrap_or_default();
    let mut out = match base {
        Some(b) => b.clone(),
        None => ParamMap {
            values: specs
                .iter()
                .filter_map(|s| Some((s.name, s.default.clone()?)))
                .collect(),
        },
    };
    for (key, value) in params.iter() {
        let Some(spec) = specs.iter().find(|s| s.name == key) else {
            bail!(UnknownParam, "{owner} has no parameter {key:?}");
        };
        out.values.insert(spec.name, convert_param(key, spec.kind, value)?);
    }
    out.values.sort_by_cached_key(|k, _| specs.iter().position(|s| s.name == *k));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorCode;
    use crate::item::parse_json;

    fn obj(json: &str) -> Object {
        match parse_json(json).unwrap() {
            Item::Object(o) => (*o).clone(),
            _ => panic!("not an object"),
        }
    }

    #[test]
    fn max_iter_is_integer() {
        let m = validate_params("LinearSVC", &obj(r#"{"maxIter": 5}"#), None).unwrap();
        assert_eq!(m.int("maxIter").unwrap(), 5);
        assert_eq!(m.double("stepSize").unwrap(), 0.1);
        assert_eq!(m.string("labelCol").unwrap(), "label");
    }

    #[test]
    fn max_iter_as_string_is_rejected() {
        let e = validate_params("LinearSVC", &obj(r#"{"maxIter": "five"}"#), None).unwrap_err();
        assert_eq!(e.code, ErrorCode::ParamTypeError);
        assert!(e.message.contains("maxIter") && e.message.contains("integer") && e.message.contains("string"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = validate_params("LinearSVC", &obj(r#"{"maxDepth": 5}"#), None).unwrap_err();
        assert_eq!(e.code, ErrorCode::UnknownParam);
    }

    #[test]
    fn overrides_layer_over_base() {
        let base = validate_params("LinearSVC", &obj(r#"{"maxIter": 5}"#), None).unwrap();
        let m = validate_params("LinearSVC", &obj(r#"{"stepSize": 1.0}"#), Some(&base)).unwrap();
        assert_eq!(m.int("maxIter").unwrap(), 5);
        assert_eq!(m.double("stepSize").unwrap(), 1.0);
    }

    #[test]
    fn ragged_matrix_is_not_a_matrix() {
        let item = parse_json("[[1.0, 2.0], [3.0]]").unwrap();
        assert!(convert_param("m", ParamKind::Matrix, &item).is_err());
        assert!(convert_param("m", ParamKind::DoubleMatrix, &item).is_ok());
    }
}
