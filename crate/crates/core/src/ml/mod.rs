//! Estimators, transformers and fitted models exposed as function items.

mod data;
mod linear;
mod model;
mod naive_bayes;
mod params;
mod scaler;
mod transformers;

use std::path::Path;
use std::sync::Arc;

use crate::error::{bail, Result};
use crate::item::{FunctionItem, Object};

pub use data::Matrix;
pub use linear::{dot, fit as fit_linear, loss, loss_and_gradient, predict as predict_linear, Gradient, LinearFit, LinearLoss};
pub use model::{artifact_of, Artifact, Extra, ESTIMATORS, MODEL_KINDS, TRANSFORMERS};
pub use naive_bayes::NaiveBayesFit;
pub use params::{convert_param, specs_for, validate_params, ParamKind, ParamMap, ParamSpec, ParamValue};
pub use transformers::tokenize_text;

/// A configured estimator such as `LinearSVC`.
pub fn get_estimator(name: &str, params: &Object) -> Result<FunctionItem> {
    if !ESTIMATORS.contains(&name) {
        bail!(UnknownEstimator, "no estimator named {name:?}");
    }
    Ok(model::estimator_item(name, validate_params(name, params, None)?))
}

/// A configured transformer such as `VectorAssembler`.
pub fn get_transformer(name: &str, params: &Object) -> Result<FunctionItem> {
    if !TRANSFORMERS.contains(&name) {
        bail!(UnknownTransformer, "no transformer named {name:?}");
    }
    let params = validate_params(name, params, None)?;
    Ok(model::transformer_item(Artifact {
        kind: name.to_string(),
        params,
        weights: Vec::new(),
        intercept: 0.0,
        extra: Extra::None,
    }))
}

pub fn save_model(model: &Arc<FunctionItem>, path: &Path) -> Result<()> {
    model::save(model, path)
}

pub fn load_model(path: &Path) -> Result<FunctionItem> {
    model::load(path)
}

/// The stored JSON form of a registry model.
pub fn model_to_json(model: &FunctionItem) -> Result<serde_json::Value> {
    match artifact_of(model) {
        Some(a) => model::to_json(&a),
        None => bail!(UnknownModelKind, "{} is not a registry model", model.display_name()),
    }
}

pub fn model_from_json(doc: &serde_json::Value) -> Result<FunctionItem> {
    Ok(model::transformer_item(model::from_json(doc)?))
}
