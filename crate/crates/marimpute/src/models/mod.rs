//! Conditional models fitted per column inside the imputation sweep.
//!
//! A model is trained on rows where the target column is observed
//! (features = the remaining columns, current working values) and is asked
//! either to draw from the estimated conditional distribution or to return
//! its conditional mean. Which of the two a method uses is the single most
//! consequential design choice for distributional imputation, so both are
//! kept for every estimator family.

mod forest;
mod linear;
mod tree;
mod truth;

pub use forest::{fit_forest, Forest, ForestOptions};
pub use linear::{fit_linear, LinearModel};
pub use tree::{fit_tree, root_split, CartModel, Tree, MIN_LEAF};
pub use truth::TruthModel;

use std::sync::Arc;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::MechanismSpec;

/// Imputation method families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Linear fit, impute by a Gaussian draw around the prediction.
    GaussianDraw,
    /// Linear fit, impute by the conditional mean.
    RegressionMean,
    /// Single regression tree, impute by drawing from the matched leaf.
    CartSample,
    /// Forest with pooled-leaf empirical draws.
    ForestSample,
    /// Forest, impute by the averaged prediction.
    ForestMean,
    /// Draws from the mechanism's analytic conditional law.
    TrueSampler,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::GaussianDraw,
        ModelKind::RegressionMean,
        ModelKind::CartSample,
        ModelKind::ForestSample,
        ModelKind::ForestMean,
        ModelKind::TrueSampler,
    ];

    /// Stochastic counterpart used during the burn-in sweeps of chained
    /// imputation. Deterministic mean fills make the working values of
    /// sibling incomplete columns exactly collinear with the features,
    /// which derails the chained fits when no row is fully observed; the
    /// mean-imputing methods therefore draw during burn-in and only apply
    /// their deterministic fill on the final sweep.
    pub fn burn_in_kind(self) -> ModelKind {
        match self {
            ModelKind::RegressionMean => ModelKind::GaussianDraw,
            ModelKind::ForestMean => ModelKind::ForestSample,
            other => other,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::GaussianDraw => "gaussian-draw",
            ModelKind::RegressionMean => "regression-mean",
            ModelKind::CartSample => "cart-sample",
            ModelKind::ForestSample => "forest-sample",
            ModelKind::ForestMean => "forest-mean",
            ModelKind::TrueSampler => "true-sampler",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-draw" => Ok(ModelKind::GaussianDraw),
            "regression-mean" => Ok(ModelKind::RegressionMean),
            "cart-sample" => Ok(ModelKind::CartSample),
            "forest-sample" => Ok(ModelKind::ForestSample),
            "forest-mean" => Ok(ModelKind::ForestMean),
            "true-sampler" => Ok(ModelKind::TrueSampler),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// A fitted per-column conditional model.
pub trait ConditionalModel: Send + Sync {
    /// Imputation value for the feature vector `x` (target column removed).
    fn sample(&self, x: &[f64], rng: &mut ChaCha12Rng) -> f64;

    /// Conditional-mean estimate for `x`.
    fn predict(&self, x: &[f64]) -> f64;
}

/// Everything `fit_model` needs besides the training rows.
pub struct FitContext {
    pub kind: ModelKind,
    /// Column being modeled (used by the true sampler).
    pub column: usize,
    /// Mechanism backing the true sampler; ignored by data-driven models.
    pub spec: Option<Arc<MechanismSpec>>,
    pub forest: ForestOptions,
    pub seed: u64,
}

/// Fits the chosen model on feature rows `xs` and targets `y`.
pub fn fit_model(
    ctx: &FitContext,
    xs: &[Vec<f64>],
    y: &[f64],
) -> Result<Box<dyn ConditionalModel>> {
    match ctx.kind {
        ModelKind::GaussianDraw => Ok(Box::new(fit_linear(xs, y)?.with_noise(true))),
        ModelKind::RegressionMean => Ok(Box::new(fit_linear(xs, y)?.with_noise(false))),
        ModelKind::CartSample => Ok(Box::new(CartModel::fit(xs, y, ctx.seed)?)),
        ModelKind::ForestSample => {
            let mut opts = ctx.forest;
            opts.aggregate_mean = false;
            Ok(Box::new(fit_forest(xs, y, &opts, ctx.seed)?))
        }
        ModelKind::ForestMean => {
            let mut opts = ctx.forest;
            opts.aggregate_mean = true;
            Ok(Box::new(fit_forest(xs, y, &opts, ctx.seed)?))
        }
        ModelKind::TrueSampler => {
            let spec = ctx.spec.clone().ok_or_else(|| {
                Error::InvalidConfig(
                    "the true sampler needs the generating mechanism".into(),
                )
            })?;
            TruthModel::new(spec, ctx.column).map(|m| Box::new(m) as Box<dyn ConditionalModel>)
        }
    }
}
