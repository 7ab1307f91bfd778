//! Latency prediction from plan features with a random forest.

mod features;
mod forest;
mod tree;

use thiserror::Error;

use crate::engine::{Constraints, ResourceSnapshot};
use crate::ir::{QueryIR, SchemaModel};
use crate::teacher::PlanConfig;
use crate::Float;

pub use features::{
    featurize, query_features, with_flags, FeatureVector, FEATURE_DIM, FEATURE_LAYOUT, FEATURE_NAMES, FLAG_DIM,
    QUERY_FEATURE_DIM,
};
pub use forest::{
    cross_validate_depth, evaluate_model, evaluate_predictions, resolve_bootstraps, train_forest, train_forest_with,
    DepthSearch, Evaluation, ForestModel, ForestParams, MODEL_FORMAT_VERSION,
};
pub use tree::{Node, RegressionTree, TreeParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostModelError {
    #[error("need at least {required} samples, got {found}")]
    InsufficientSamples { found: usize, required: usize },
    #[error("{features} feature rows but {targets} targets")]
    LengthMismatch { features: usize, targets: usize },
    #[error("expected {expected} features, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite feature or target")]
    NonFinite,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("feature layout `{found}` does not match `{expected}`")]
    LayoutMismatch { expected: String, found: String },
    #[error("malformed model: {0}")]
    Format(String),
}

/// Anything that can estimate a plan's latency before running it.
pub trait LatencyPredictor: Sync {
    fn predict_latency(
        &self,
        ir: &QueryIR,
        config: PlanConfig,
        schema: &SchemaModel,
        resources: &ResourceSnapshot,
        constraints: &Constraints,
    ) -> f64;
}

impl<F: Float> LatencyPredictor for ForestModel<F> {
    fn predict_latency(
        &self,
        ir: &QueryIR,
        config: PlanConfig,
        schema: &SchemaModel,
        resources: &ResourceSnapshot,
        constraints: &Constraints,
    ) -> f64 {
        let fv: Vec<F> = featurize(ir, config, schema, resources, constraints)
            .iter()
            .map(|&v| F::of(v))
            .collect();
        self.predict(&fv).map(Float::f64).unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests;
