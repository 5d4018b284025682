//! Unlearning engines: exact projection, Newton-step baselines and
//! retraining, plus the analytic closeness bounds.

mod bounds;
mod newton;
mod projector;
mod retrain;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bounds::{
    estimate_constants, observed_constants, prop2_condition, propagation_row_norms, theorem1_bound,
    BoundConstants, ObservedBound, Prop2Verdict, RowNorms, DENSE_POWER_LIMIT,
};
pub use newton::{fisher_plus, influence_plus, inverse_quarter_power, newton_on_remaining};
pub use projector::{project_model, projector_unlearn, SPAN_WARN_TOLERANCE};
pub use retrain::{fit_model, retrain_baseline, train_config_of};

use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::features::GramState;
use crate::graph::NodeSet;
use crate::linear_model::ModelWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Projector,
    #[serde(alias = "influence")]
    InfluencePlus,
    #[serde(alias = "fisher")]
    FisherPlus,
    Retrain,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Projector,
        Strategy::InfluencePlus,
        Strategy::FisherPlus,
        Strategy::Retrain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Projector => "projector",
            Strategy::InfluencePlus => "influence_plus",
            Strategy::FisherPlus => "fisher_plus",
            Strategy::Retrain => "retrain",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "projector" => Ok(Strategy::Projector),
            "influence_plus" | "influence" => Ok(Strategy::InfluencePlus),
            "fisher_plus" | "fisher" => Ok(Strategy::FisherPlus),
            "retrain" => Ok(Strategy::Retrain),
            _ => Err(Error::config(
                "strategy",
                format!("unknown strategy `{s}` (projector, influence_plus, fisher_plus, retrain)"),
            )),
        }
    }
}

/// Which Hessian and gradient the influence step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceMode {
    /// Gradient over the affected training nodes and Hessian over the rest,
    /// both on the pre-deletion graph.
    #[default]
    Plain,
    /// Full Newton step on the post-deletion objective.
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnRequest {
    pub deleted: NodeSet,
    pub strategy: Strategy,
    /// Std of the Gaussian perturbation added by the approximate strategies.
    pub noise_std: f64,
    /// Fine-tuning steps applied after projection.
    pub finetune_k: usize,
    /// Ridge for the projection; defaults to a trace-scaled value.
    pub ridge_eps: Option<f64>,
    /// Root seed for the noise draw.
    pub seed: u64,
    pub influence_mode: InfluenceMode,
    /// Raw-feature column whose weight norm is reported after unlearning.
    pub probe_column: Option<usize>,
    /// Return projection coefficients in the diagnostics.
    pub keep_alpha: bool,
}

impl UnlearnRequest {
    pub fn new(deleted: NodeSet, strategy: Strategy) -> Self {
        UnlearnRequest {
            deleted,
            strategy,
            noise_std: 0.0,
            finetune_k: 0,
            ridge_eps: None,
            seed: 0,
            influence_mode: InfluenceMode::Plain,
            probe_column: None,
            keep_alpha: false,
        }
    }
}

/// Per-request measurements; absent entries do not apply to the strategy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orthogonality_residual: Option<f64>,
    /// `orthogonality_residual / ‖w‖`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_residual: Option<f64>,
    /// Largest relative distance of a weight block from the span of all
    /// node features before projection.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pre_span_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub injected_channel_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affected_set_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_draw_seed: Option<u64>,
    /// `direct` or `woodbury`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finetune_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remaining_nodes: Option<usize>,
    /// Projection coefficients over the remaining nodes, one vector per
    /// weight row and feature block.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnResult {
    pub strategy: Strategy,
    pub weights: ModelWeights,
    pub elapsed_seconds: f64,
    pub diagnostics: Diagnostics,
}

/// Norm of the weights on raw-feature column `probe`, across every row and
/// feature block.
pub fn probe_norm(weights: &ModelWeights, raw_dim: usize, probe: usize) -> f64 {
    let blocks = weights.dim() / raw_dim.max(1);
    (0..blocks)
        .map(|b| weights.column_norm(b * raw_dim + probe).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn check_request(model: &ModelWeights, data: &GnnData, request: &UnlearnRequest) -> Result<()> {
    let n = data.num_nodes();
    if let Some(index) = request.deleted.max().filter(|&m| m >= n) {
        return Err(Error::NodeOutOfRange { index, num_nodes: n });
    }
    if !request.deleted.is_subset(&data.train) {
        return Err(Error::InvalidInput(
            "deleted nodes must belong to the training set".into(),
        ));
    }
    if !request.deleted.is_empty() && data.train.difference(&request.deleted).is_empty() {
        return Err(Error::EmptyRemaining("every training node is deleted".into()));
    }
    if !(request.noise_std >= 0.0 && request.noise_std.is_finite()) {
        return Err(Error::config("noise_std", "must be finite and >= 0"));
    }
    if let Some(eps) = request.ridge_eps {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::config("ridge_eps", "must be finite and > 0"));
        }
    }
    let raw = data.features.dim();
    if raw == 0 || !model.dim().is_multiple_of(raw) {
        return Err(Error::DimensionMismatch(format!(
            "model of dimension {} over raw features of dimension {raw}",
            model.dim()
        )));
    }
    if let Some(p) = request.probe_column.filter(|&p| p >= raw) {
        return Err(Error::config("probe_column", format!("column {p} out of range for {raw} features")));
    }
    Ok(())
}

/// Runs `request.strategy`. `gram` selects the precomputed (Woodbury) path
/// for the projector and is ignored by the other strategies.
pub fn unlearn(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    request: &UnlearnRequest,
    gram: Option<&GramState>,
) -> Result<UnlearnResult> {
    check_request(model, data, request)?;
    if model.dim() != data.features.dim() * prop.blocks() {
        return Err(Error::DimensionMismatch(format!(
            "model dimension {} does not match {} feature blocks of dimension {}",
            model.dim(),
            prop.blocks(),
            data.features.dim()
        )));
    }
    let mut result = match request.strategy {
        Strategy::Projector => projector_unlearn(model, data, prop, request, gram)?,
        Strategy::InfluencePlus => influence_plus(model, data, prop, request)?,
        Strategy::FisherPlus => fisher_plus(model, data, prop, request)?,
        Strategy::Retrain => retrain_baseline(model, data, prop, &request.deleted)?,
    };
    if let Some(p) = request.probe_column {
        result.diagnostics.injected_channel_norm =
            Some(probe_norm(&result.weights, data.features.dim(), p));
    }
    result
        .weights
        .provenance
        .extra
        .insert("unlearn_strategy".into(), request.strategy.name().into());
    result
        .weights
        .provenance
        .extra
        .insert("deleted_count".into(), request.deleted.len().to_string());
    Ok(result)
}

/// Seeded `N(0, std²)` draws, `count` of them.
pub(crate) fn gaussian_noise(seed: u64, std: f64, count: usize) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let mut rng = crate::seed::rng_from(seed);
    match Normal::new(0.0, std) {
        Ok(normal) => (0..count).map(|_| normal.sample(&mut rng)).collect(),
        Err(_) => vec![0.0; count],
    }
}
