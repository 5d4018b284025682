use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use super::loss::{binary_target, check_inputs, objective_on};
use super::{Labels, LossKind, ModelWeights, Provenance};
use crate::error::{Error, Result};
use crate::features::{axpy, dot, norm, FeatureMatrix};
use crate::graph::NodeSet;
use crate::seed::{derive_seed, rng_from, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub eta: f64,
    pub epochs: usize,
    /// `None` (or a size covering the training set) means full-batch GD.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be finite and >= 0"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::config("eta", "must be finite and > 0"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::config("batch_size", "must be positive"));
        }
        Ok(())
    }
}

/// Objective and gradient norm per epoch; index 0 is the initial point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub objectives: Vec<f64>,
    pub gradient_norms: Vec<f64>,
    pub steps: usize,
    pub elapsed_seconds: f64,
}

impl TrainTrace {
    pub fn final_objective(&self) -> Option<f64> {
        self.objectives.last().copied()
    }
}

fn step(weights: &mut ModelWeights, gradient: &[f64], eta: f64, epoch: usize) -> Result<()> {
    axpy(-eta, gradient, weights.data_mut());
    if let Some(bad) = weights.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::Divergence { epoch, value: *bad });
    }
    Ok(())
}

fn record(trace: &mut TrainTrace, weights: &ModelWeights, h: &FeatureMatrix, labels: &Labels, nodes: &[usize], lambda: f64, epoch: usize) -> Result<Vec<f64>> {
    let lg = objective_on(weights, h, labels, nodes, lambda);
    if !lg.objective.is_finite() {
        return Err(Error::Divergence {
            epoch,
            value: lg.objective,
        });
    }
    trace.objectives.push(lg.objective);
    trace.gradient_norms.push(norm(&lg.gradient));
    Ok(lg.gradient)
}

/// Gradient descent from `init`: full-batch when the batch covers the
/// training set, otherwise mini-batch SGD with a fresh seeded permutation
/// each epoch.
pub fn train(
    init: &ModelWeights,
    h: &FeatureMatrix,
    labels: &Labels,
    train_set: &NodeSet,
    config: &TrainConfig,
) -> Result<(ModelWeights, TrainTrace)> {
    train_observed(init, h, labels, train_set, config, &mut |_| {})
}

/// [`train`], calling `observer` on the initial weights and after every
/// epoch.
pub fn train_observed(
    init: &ModelWeights,
    h: &FeatureMatrix,
    labels: &Labels,
    train_set: &NodeSet,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&ModelWeights),
) -> Result<(ModelWeights, TrainTrace)> {
    config.validate()?;
    let nodes = train_set.as_slice();
    check_inputs(init, h, labels, nodes)?;
    let start = Instant::now();
    let mut weights = init.clone();
    weights.provenance.lambda = config.lambda;
    weights.provenance.eta = config.eta;
    weights.provenance.epochs = config.epochs;
    weights.provenance.batch_size = config.batch_size;
    weights.provenance.seed = config.seed;
    let mut trace = TrainTrace::default();
    let full_batch = config.batch_size.is_none_or(|b| b >= nodes.len());

    let mut grad = record(&mut trace, &weights, h, labels, nodes, config.lambda, 0)?;
    observer(&weights);
    if full_batch {
        for epoch in 0..config.epochs {
            step(&mut weights, &grad, config.eta, epoch)?;
            trace.steps += 1;
            grad = record(&mut trace, &weights, h, labels, nodes, config.lambda, epoch + 1)?;
            observer(&weights);
        }
    } else {
        let batch = config.batch_size.unwrap_or(nodes.len());
        let mut rng = rng_from(derive_seed(config.seed, Stream::Batches));
        let mut order = nodes.to_vec();
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let lg = objective_on(&weights, h, labels, chunk, config.lambda);
                if !lg.objective.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        value: lg.objective,
                    });
                }
                step(&mut weights, &lg.gradient, config.eta, epoch)?;
                trace.steps += 1;
            }
            record(&mut trace, &weights, h, labels, nodes, config.lambda, epoch + 1)?;
            observer(&weights);
        }
    }
    trace.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok((weights, trace))
}

/// `K` full-batch steps on the remaining nodes. The default rate is
/// `1/(λ + max‖h_i‖²)` over the remaining rows.
pub fn finetune(
    weights: &ModelWeights,
    h_remain: &FeatureMatrix,
    labels: &Labels,
    remain_set: &NodeSet,
    k: usize,
    lr_override: Option<f64>,
) -> Result<(ModelWeights, TrainTrace)> {
    let lambda = weights.lambda();
    let lr = match lr_override {
        Some(lr) => lr,
        None => {
            let bx2 = remain_set
                .iter()
                .filter(|&i| i < h_remain.rows())
                .map(|i| dot(h_remain.row(i), h_remain.row(i)))
                .fold(0.0, f64::max);
            let smooth = lambda + bx2;
            if smooth > 0.0 {
                1.0 / smooth
            } else {
                1.0
            }
        }
    };
    let config = TrainConfig {
        lambda,
        eta: lr,
        epochs: k,
        batch_size: None,
        seed: weights.provenance.seed,
    };
    let (mut out, trace) = train(weights, h_remain, labels, remain_set, &config)?;
    out.provenance = weights.provenance.clone();
    out.provenance.extra.insert("finetune_steps".into(), k.to_string());
    out.provenance.extra.insert("finetune_lr".into(), format!("{lr:e}"));
    Ok((out, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PegasosConfig {
    pub lambda: f64,
    pub iterations: usize,
    /// Nodes sampled per iteration; `None` uses the whole training set.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

/// Pegasos on `λ/2‖w‖² + mean max(0, 1 − y wᵀh)`: step `1/(λt)`, then
/// rescale onto the ball of radius `1/√λ`. Starts from zero, and every
/// update is a combination of the current iterate and feature rows.
pub fn pegasos_train(
    h: &FeatureMatrix,
    labels: &Labels,
    train_set: &NodeSet,
    config: &PegasosConfig,
) -> Result<ModelWeights> {
    if !(config.lambda > 0.0 && config.lambda.is_finite()) {
        return Err(Error::config("lambda", "pegasos needs a finite lambda > 0"));
    }
    if config.batch_size == Some(0) {
        return Err(Error::config("batch_size", "must be positive"));
    }
    let mut provenance = Provenance::new(config.lambda);
    provenance.epochs = config.iterations;
    provenance.batch_size = config.batch_size;
    provenance.seed = config.seed;
    provenance.extra.insert("solver".into(), "pegasos".into());
    let mut weights = ModelWeights::zeros_for(LossKind::Hinge, labels, h.dim(), provenance)?;
    let nodes = train_set.as_slice();
    check_inputs(&weights, h, labels, nodes)?;
    if nodes.is_empty() {
        return Ok(weights);
    }
    let radius = 1.0 / config.lambda.sqrt();
    let mut rng = rng_from(derive_seed(config.seed, Stream::Batches));
    let d = h.dim();
    let mut direction = vec![0.0; d];
    for t in 1..=config.iterations {
        let batch: Vec<usize> = match config.batch_size {
            Some(b) if b < nodes.len() => nodes.choose_multiple(&mut rng, b).copied().collect(),
            _ => nodes.to_vec(),
        };
        direction.iter_mut().for_each(|v| *v = 0.0);
        for &i in &batch {
            let y = binary_target(LossKind::Hinge, labels, i, 0);
            if y * dot(weights.row(0), h.row(i)) < 1.0 {
                axpy(y, h.row(i), &mut direction);
            }
        }
        let eta = 1.0 / (config.lambda * t as f64);
        let shrink = 1.0 - eta * config.lambda;
        let scale = eta / batch.len() as f64;
        for (w, g) in weights.data_mut().iter_mut().zip(&direction) {
            *w = shrink * *w + scale * g;
        }
        let wn = weights.norm();
        if !wn.is_finite() {
            return Err(Error::Divergence { epoch: t, value: wn });
        }
        if wn > radius {
            let s = radius / wn;
            weights.data_mut().iter_mut().for_each(|w| *w *= s);
        }
    }
    Ok(weights)
}
