//! Estimator and model function items, the pipeline fold, and model
//! persistence.

use std::any::Any;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value as Json};

use super::data::{feature_matrix, frame_arg, prediction_column};
use super::linear::{self, LinearLoss};
use super::naive_bayes::{self, NaiveBayesFit};
use super::params::{specs_for, validate_params, ParamKind, ParamMap, ParamValue};
use super::{scaler, transformers};
use crate::error::{bail, err, Error, Result};
use crate::frame::{vector_column, Frame, FrameType};
use crate::item::{CallContext, FunctionItem, FunctionSignature, Item, NativeFunction, Object, Sequence, Value};
use crate::runtime::ModePolicy;

pub const TRANSFORMERS: [&str; 3] = ["Tokenizer", "VectorAssembler", "VectorSlicer"];
pub const ESTIMATORS: [&str; 5] = ["LogisticRegression", "LinearSVC", "NaiveBayes", "MaxAbsScaler", "Pipeline"];
pub const MODEL_KINDS: [&str; 5] = [
    "LogisticRegressionModel",
    "LinearSVCModel",
    "NaiveBayesModel",
    "MaxAbsScalerModel",
    "PipelineModel",
];

#[derive(Debug, Clone)]
pub enum Extra {
    None,
    MaxAbs(Vec<f64>),
    NaiveBayes(NaiveBayesFit),
    Stages(Vec<Arc<FunctionItem>>),
}

/// Everything a fitted model or configured transformer needs to run.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub kind: String,
    pub params: ParamMap,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub extra: Extra,
}

impl Artifact {
    fn plain(kind: &str, params: ParamMap) -> Artifact {
        Artifact {
            kind: kind.to_string(),
            params,
            weights: Vec::new(),
            intercept: 0.0,
            extra: Extra::None,
        }
    }
}

/// A transformer backed by an artifact.
#[derive(Debug)]
pub struct ModelFunction(pub Arc<Artifact>);

/// An estimator with its construction-time parameters.
#[derive(Debug)]
pub struct EstimatorFunction {
    pub name: String,
    pub params: ParamMap,
}

pub(crate) fn transformer_item(artifact: Artifact) -> FunctionItem {
    let name = artifact.kind.clone();
    FunctionItem::native(name, FunctionSignature::transformer(), Arc::new(ModelFunction(Arc::new(artifact))))
}

pub(crate) fn estimator_item(name: &str, params: ParamMap) -> FunctionItem {
    FunctionItem::native(
        name,
        FunctionSignature::estimator(),
        Arc::new(EstimatorFunction {
            name: name.to_string(),
            params,
        }),
    )
}

/// The single parameter object of a transformer or estimator call.
fn params_arg(value: &Value, owner: &str) -> Result<Object> {
    match value.as_single() {
        Some(Item::Object(o)) => Ok((**o).clone()),
        _ => bail!(TypeError, "{owner} expects one parameter object as its second argument, got {} item(s)", value.len()),
    }
}

fn output(frame: Frame, cx: &CallContext) -> Sequence {
    let frame = Arc::new(frame);
    if cx.policy == ModePolicy::ForceLocal {
        Sequence::from_iter(Frame::into_rows(frame).map(Ok))
    } else {
        Sequence::Frame(frame)
    }
}

impl NativeFunction for ModelFunction {
    fn tag(&self) -> String {
        format!("model:{}", self.0.kind)
    }

    fn call(&self, args: Vec<Value>, cx: &CallContext) -> Result<Sequence> {
        let a = &self.0;
        let overrides = params_arg(&args[1], &a.kind)?;
        let params = validate_params(&a.kind, &overrides, Some(&a.params))?;
        let frame = frame_arg(&args[0], cx)?;
        apply(a, &params, frame, cx)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

fn apply(a: &Artifact, params: &ParamMap, frame: Arc<Frame>, cx: &CallContext) -> Result<Sequence> {
    let out = match (a.kind.as_str(), &a.extra) {
        ("Tokenizer", _) => transformers::tokenizer(&frame, params)?,
        ("VectorAssembler", _) => transformers::vector_assembler(&frame, params)?,
        ("VectorSlicer", _) => transformers::vector_slicer(&frame, params)?,
        ("LogisticRegressionModel" | "LinearSVCModel", _) => {
            let x = feature_matrix(&frame, params.string("featuresCol")?)?;
            if x.rows > 0 && x.cols != a.weights.len() {
                bail!(RaggedVectors, "model expects {} features, input has {}", a.weights.len(), x.cols);
            }
            let values = linear::predict(&x, &a.weights, a.intercept);
            let (ty, col) = prediction_column(&frame, params.string("labelCol")?, values);
            frame.add_column(params.string("predictionCol")?, ty, col)?
        }
        ("NaiveBayesModel", Extra::NaiveBayes(nb)) => {
            let x = feature_matrix(&frame, params.string("featuresCol")?)?;
            let values = naive_bayes::predict(nb, &x, params.doubles("thresholds"))?;
            let (ty, col) = prediction_column(&frame, params.string("labelCol")?, values);
            frame.add_column(params.string("predictionCol")?, ty, col)?
        }
        ("MaxAbsScalerModel", Extra::MaxAbs(m)) => {
            let x = feature_matrix(&frame, params.string("inputCol")?)?;
            if x.rows > 0 && x.cols != m.len() {
                bail!(RaggedVectors, "model expects {} features, input has {}", m.len(), x.cols);
            }
            let rows: Vec<Vec<f64>> = (0..x.rows).map(|i| scaler::scale(x.row(i), m)).collect();
            let col = vector_column(rows.iter().map(Vec::as_slice));
            frame.add_column(params.string("outputCol")?, FrameType::array(FrameType::Double), col)?
        }
        ("PipelineModel", Extra::Stages(stages)) => {
            let mut current = Value::Frame(frame);
            for (i, stage) in stages.iter().enumerate() {
                current = apply_stage(stage, current, cx).map_err(|e| in_stage(i, e))?;
            }
            return Ok(current.to_sequence());
        }
        (kind, _) => bail!(UnknownModelKind, "no model kind {kind:?}"),
    };
    Ok(output(out, cx))
}

fn in_stage(i: usize, e: Error) -> Error {
    Error {
        message: format!("stage {i}: {}", e.message),
        ..e
    }
}

fn empty_params() -> Value {
    Value::single(Item::object(Object::new()))
}

/// Runs one transformer stage and brings its output back to a frame.
fn apply_stage(stage: &FunctionItem, input: Value, cx: &CallContext) -> Result<Value> {
    let out = stage.call(vec![input, empty_params()], cx)?;
    Ok(match out {
        Sequence::Frame(f) => Value::Frame(f),
        other => {
            let items = other.materialize(cx.cap)?;
            if cx.policy == ModePolicy::ForceLocal {
                Value::from_items(items)
            } else {
                Value::Frame(Arc::new(Frame::infer_from_items(&items)?))
            }
        }
    })
}

impl NativeFunction for EstimatorFunction {
    fn tag(&self) -> String {
        format!("estimator:{}", self.name)
    }

    fn call(&self, args: Vec<Value>, cx: &CallContext) -> Result<Sequence> {
        let overrides = params_arg(&args[1], &self.name)?;
        let params = validate_params(&self.name, &overrides, Some(&self.params))?;
        let frame = frame_arg(&args[0], cx)?;
        let artifact = fit(&self.name, params, frame, cx)?;
        Ok(Sequence::Single(Item::function(transformer_item(artifact))))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

fn fit(name: &str, params: ParamMap, frame: Arc<Frame>, cx: &CallContext) -> Result<Artifact> {
    let model = |kind: &str, params: ParamMap| Artifact::plain(&format!("{kind}Model"), params);
    Ok(match name {
        "LogisticRegression" | "LinearSVC" => {
            let loss = if name == "LinearSVC" { LinearLoss::Hinge } else { LinearLoss::Logistic };
            let f = linear::fit(loss, &frame, &params)?;
            Artifact {
                weights: f.weights,
                intercept: f.intercept,
                ..model(name, params)
            }
        }
        "NaiveBayes" => {
            let nb = naive_bayes::fit(&frame, &params)?;
            Artifact {
                extra: Extra::NaiveBayes(nb),
                ..model(name, params)
            }
        }
        "MaxAbsScaler" => {
            let m = scaler::fit(&frame, &params)?;
            Artifact {
                extra: Extra::MaxAbs(m),
                ..model(name, params)
            }
        }
        "Pipeline" => {
            let stages = params.functions("stages")?;
            if stages.is_empty() {
                bail!(StageTypeError, "a pipeline needs at least one stage");
            }
            let mut fitted = Vec::with_capacity(stages.len());
            let mut current = Value::Frame(frame);
            for (i, stage) in stages.iter().enumerate() {
                let mut step = || -> Result<()> {
                    let transformer = if stage.signature.is_estimator_shaped() {
                        let out = stage.call(vec![current.clone(), empty_params()], cx)?;
                        match out.exactly_one("an estimator stage")? {
                            Item::Function(f) if f.arity() == 2 => f,
                            other => bail!(StageTypeError, "estimator returned {}, not a transformer", other.type_name()),
                        }
                    } else if stage.arity() == 2 {
                        stage.clone()
                    } else {
                        bail!(StageTypeError, "{} is neither a transformer nor an estimator", stage.display_name());
                    };
                    current = apply_stage(&transformer, current.clone(), cx)?;
                    fitted.push(transformer);
                    Ok(())
                };
                step().map_err(|e| in_stage(i, e))?;
            }
            Artifact {
                extra: Extra::Stages(fitted),
                ..Artifact::plain("PipelineModel", ParamMap::default())
            }
        }
        other => bail!(UnknownEstimator, "no estimator named {other:?}"),
    })
}

/// The artifact behind a function item, if a registry model created it.
pub fn artifact_of(f: &FunctionItem) -> Option<Arc<Artifact>> {
    let native = f.native_body()?;
    native.as_any().downcast_ref::<ModelFunction>().map(|m| m.0.clone())
}

fn param_json(v: &ParamValue) -> Json {
    match v {
        ParamValue::Boolean(b) => json!(b),
        ParamValue::Double(x) => json!(x),
        ParamValue::Int(x) => json!(x),
        ParamValue::String(s) => json!(s),
        ParamValue::Doubles(x) => json!(x),
        ParamValue::DoubleMatrix(x) => json!(x),
        ParamValue::Ints(x) => json!(x),
        ParamValue::Strings(x) => json!(x),
        ParamValue::Function(_) | ParamValue::Functions(_) => Json::Null,
    }
}

pub fn to_json(a: &Artifact) -> Result<Json> {
    let mut params = Map::new();
    for (k, v) in a.params.iter() {
        if !matches!(v, ParamValue::Function(_) | ParamValue::Functions(_)) {
            params.insert(k.to_string(), param_json(v));
        }
    }
    let mut doc = Map::new();
    doc.insert("kind".into(), json!(a.kind));
    doc.insert("params".into(), Json::Object(params));
    doc.insert("weights".into(), json!(a.weights));
    doc.insert("intercept".into(), json!(a.intercept));
    match &a.extra {
        Extra::None => {}
        Extra::MaxAbs(m) => {
            doc.insert("maxAbs".into(), json!(m));
        }
        Extra::NaiveBayes(nb) => {
            doc.insert("labels".into(), json!(nb.labels));
            doc.insert("pi".into(), json!(nb.pi));
            doc.insert("theta".into(), json!(nb.theta));
        }
        Extra::Stages(stages) => {
            let stages = stages
                .iter()
                .enumerate()
                .map(|(i, s)| match artifact_of(s) {
                    Some(a) => to_json(&a),
                    None => bail!(UnknownModelKind, "stage {i}: {} is not a registry model", s.display_name()),
                })
                .collect::<Result<Vec<_>>>()?;
            doc.insert("stages".into(), Json::Array(stages));
        }
    }
    Ok(Json::Object(doc))
}

fn bad(what: &str) -> Error {
    err!(JsonError, "model document: {what}")
}

fn f64s(v: Option<&Json>, what: &str) -> Result<Vec<f64>> {
    v.and_then(Json::as_array)
        .ok_or_else(|| bad(&format!("{what} must be an array of numbers")))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| bad(&format!("{what} must be an array of numbers"))))
        .collect()
}

fn param_from_json(kind: ParamKind, v: &Json) -> Option<ParamValue> {
    let doubles = |v: &Json| v.as_array()?.iter().map(Json::as_f64).collect::<Option<Vec<_>>>();
    let strings = |v: &Json| {
        v.as_array()?
            .iter()
            .map(|s| s.as_str().map(str::to_string))
            .collect::<Option<Vec<_>>>()
    };
    Some(match kind {
        ParamKind::Boolean => ParamValue::Boolean(v.as_bool()?),
        ParamKind::Double | ParamKind::Float => ParamValue::Double(v.as_f64()?),
        ParamKind::Int | ParamKind::Long => ParamValue::Int(v.as_i64()?),
        ParamKind::String => ParamValue::String(v.as_str()?.to_string()),
        ParamKind::DoubleArray | ParamKind::Vector => ParamValue::Doubles(doubles(v)?),
        ParamKind::DoubleMatrix | ParamKind::Matrix => {
            ParamValue::DoubleMatrix(v.as_array()?.iter().map(doubles).collect::<Option<Vec<_>>>()?)
        }
        ParamKind::IntArray => ParamValue::Ints(v.as_array()?.iter().map(Json::as_i64).collect::<Option<Vec<_>>>()?),
        ParamKind::StringArray => ParamValue::Strings(strings(v)?),
        ParamKind::Transformer | ParamKind::Estimator | ParamKind::StageArray => return None,
    })
}

pub fn from_json(doc: &Json) -> Result<Artifact> {
    let kind = doc
        .get("kind")
        .and_then(Json::as_str)
        .ok_or_else(|| bad("\"kind\" must be a string"))?;
    if !MODEL_KINDS.contains(&kind) && !TRANSFORMERS.contains(&kind) {
        bail!(UnknownModelKind, "unknown model kind {kind:?}");
    }
    let specs = specs_for(kind).unwrap_or_default();
    let mut params = validate_params(kind, &Object::new(), None)?;
    let stored = doc
        .get("params")
        .and_then(Json::as_object)
        .ok_or_else(|| bad("\"params\" must be an object"))?;
    for (k, v) in stored {
        let Some(spec) = specs.iter().find(|s| s.name == k) else {
            bail!(UnknownParam, "{kind} has no parameter {k:?}");
        };
        let value = param_from_json(spec.kind, v)
            .ok_or_else(|| err!(ParamTypeError, "parameter {k:?} expects {}, got {v}", spec.kind.item_type()))?;
        params.set(spec.name, value);
    }
    let weights = f64s(doc.get("weights"), "\"weights\"")?;
    let intercept = doc
        .get("intercept")
        .and_then(Json::as_f64)
        .ok_or_else(|| bad("\"intercept\" must be a number"))?;
    let extra = match kind {
        "MaxAbsScalerModel" => Extra::MaxAbs(f64s(doc.get("maxAbs"), "\"maxAbs\"")?),
        "NaiveBayesModel" => {
            let theta = doc
                .get("theta")
                .and_then(Json::as_array)
                .ok_or_else(|| bad("\"theta\" must be an array"))?
                .iter()
                .map(|row| f64s(Some(row), "\"theta\" rows"))
                .collect::<Result<Vec<_>>>()?;
            let nb = NaiveBayesFit {
                labels: f64s(doc.get("labels"), "\"labels\"")?,
                pi: f64s(doc.get("pi"), "\"pi\"")?,
                theta,
            };
            if nb.labels.len() != nb.pi.len() || nb.labels.len() != nb.theta.len() {
                return Err(bad("\"labels\", \"pi\" and \"theta\" disagree on the class count"));
            }
            Extra::NaiveBayes(nb)
        }
        "PipelineModel" => Extra::Stages(
            doc.get("stages")
                .and_then(Json::as_array)
                .ok_or_else(|| bad("\"stages\" must be an array"))?
                .iter()
                .map(|s| from_json(s).map(|a| Arc::new(transformer_item(a))))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => Extra::None,
    };
    Ok(Artifact {
        kind: kind.to_string(),
        params,
        weights,
        intercept,
        extra,
    })
}

pub fn save(model: &FunctionItem, path: &Path) -> Result<()> {
    let Some(a) = artifact_of(model) else {
        bail!(UnknownModelKind, "{} is not a registry model and cannot be saved", model.display_name());
    };
    let text = serde_json::to_string_pretty(&to_json(&a)?).map_err(|e| err!(JsonError, "{e}"))?;
    std::fs::write(path, text).map_err(|e| err!(IoError, "cannot write {}: {e}", path.display()))
}

pub fn load(path: &Path) -> Result<FunctionItem> {
    let text = std::fs::read_to_string(path).map_err(|e| err!(IoError, "cannot read {}: {e}", path.display()))?;
    let doc: Json = serde_json::from_str(&text).map_err(|e| err!(JsonError, "{}: {e}", path.display()))?;
    Ok(transformer_item(from_json(&doc)?))
}
