use serde::{Deserialize, Serialize};

use super::sample_fraction;
use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::NodeSet;
use crate::linear_model::{evaluate, LossKind, TrainConfig};
use crate::unlearn::{fit_model, probe_norm, unlearn, Diagnostics, Strategy, UnlearnRequest};

/// How the deleted nodes are made distinguishable through their labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionLabels {
    /// Deleted nodes move to a fresh class.
    #[default]
    NewClass,
    /// Binary labels of the deleted nodes are flipped.
    Flip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionConfig {
    /// Fraction of the training nodes to delete.
    pub delete_fraction: f64,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub labels: InjectionLabels,
    /// Defaults to one-vs-rest logistic for `NewClass` and logistic for
    /// `Flip`.
    #[serde(default)]
    pub loss: Option<LossKind>,
    pub train: TrainConfig,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub finetune_k: usize,
    #[serde(default)]
    pub seed: u64,
    /// Run every strategy once untimed before the measured run.
    #[serde(default)]
    pub warmup: bool,
}

impl InjectionConfig {
    pub fn new(train: TrainConfig) -> Self {
        InjectionConfig {
            delete_fraction: 0.05,
            strategies: vec![Strategy::Projector, Strategy::InfluencePlus, Strategy::FisherPlus],
            labels: InjectionLabels::NewClass,
            loss: None,
            train,
            noise_std: 0.0,
            finetune_k: 0,
            seed: 0,
            warmup: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub injected_channel_norm_after: f64,
    pub accuracy_after: f64,
    pub unlearn_seconds: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionReport {
    pub deleted_count: usize,
    /// Column index of the injected channel in the raw features.
    pub probe_column: usize,
    pub injected_channel_norm_before: f64,
    pub accuracy_before: f64,
    pub outcomes: Vec<StrategyOutcome>,
    pub retrain_seconds: f64,
    pub retrain_accuracy: f64,
}

impl InjectionReport {
    pub fn outcome(&self, strategy: Strategy) -> Option<&StrategyOutcome> {
        self.outcomes.iter().find(|o| o.strategy == strategy)
    }
}

/// Appends a binary column that is 1 exactly on `marked`.
pub fn inject_channel(x: &FeatureMatrix, marked: &NodeSet) -> Result<FeatureMatrix> {
    if let Some(index) = marked.max().filter(|&m| m >= x.rows()) {
        return Err(Error::NodeOutOfRange {
            index,
            num_nodes: x.rows(),
        });
    }
    let column: Vec<f64> = (0..x.rows()).map(|i| if marked.contains(i) { 1.0 } else { 0.0 }).collect();
    x.with_column(&column)
}

/// Plants a feature that only the deleted nodes carry, ties it to their
/// labels, trains on everything and checks how much weight each strategy
/// leaves on that feature.
pub fn feature_injection_experiment(
    data: &GnnData,
    prop: &PropagationConfig,
    config: &InjectionConfig,
) -> Result<InjectionReport> {
    let deleted = sample_fraction(&data.train, config.delete_fraction, config.seed)?;
    let probe = data.features.dim();
    let features = inject_channel(&data.features, &deleted)?;
    let (labels, default_loss) = match config.labels {
        InjectionLabels::NewClass => (data.labels.with_new_class(&deleted), LossKind::OvrLogistic),
        InjectionLabels::Flip => (data.labels.flipped(&deleted)?, LossKind::Logistic),
    };
    let injected = GnnData::new(
        data.graph.clone(),
        features,
        labels,
        data.train.clone(),
        data.test.clone(),
    )?;
    let loss = config.loss.unwrap_or(default_loss);
    let (model, _) = fit_model(&injected, prop, loss, &config.train)?;
    let h = injected.inputs(prop)?;
    let accuracy_before = evaluate(&model, &h, &injected.labels, &injected.test).accuracy;

    let (remaining, _) = injected.delete(&deleted)?;
    let h_after = remaining.inputs(prop)?;
    let request_for = |strategy| UnlearnRequest {
        noise_std: config.noise_std,
        finetune_k: config.finetune_k,
        seed: config.seed,
        probe_column: Some(probe),
        ..UnlearnRequest::new(deleted.clone(), strategy)
    };

    let mut outcomes = Vec::with_capacity(config.strategies.len());
    for &strategy in &config.strategies {
        let request = request_for(strategy);
        if config.warmup {
            unlearn(&model, &injected, prop, &request, None)?;
        }
        let result = unlearn(&model, &injected, prop, &request, None)?;
        outcomes.push(StrategyOutcome {
            strategy,
            injected_channel_norm_after: probe_norm(&result.weights, probe + 1, probe),
            accuracy_after: evaluate(&result.weights, &h_after, &remaining.labels, &remaining.test).accuracy,
            unlearn_seconds: result.elapsed_seconds,
            diagnostics: result.diagnostics,
        });
    }

    let request = request_for(Strategy::Retrain);
    if config.warmup {
        unlearn(&model, &injected, prop, &request, None)?;
    }
    let retrained = unlearn(&model, &injected, prop, &request, None)?;
    Ok(InjectionReport {
        deleted_count: deleted.len(),
        probe_column: probe,
        injected_channel_norm_before: probe_norm(&model, probe + 1, probe),
        accuracy_before,
        outcomes,
        retrain_seconds: retrained.elapsed_seconds,
        retrain_accuracy: evaluate(&retrained.weights, &h_after, &remaining.labels, &remaining.test).accuracy,
    })
}
