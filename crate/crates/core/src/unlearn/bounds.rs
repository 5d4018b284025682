use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::projector::project_model;
use super::retrain::train_config_of;
use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::features::{delta_measure, norm, DeltaMode, FeatureMatrix};
use crate::graph::{build_propagation, delete_nodes, propagate, NodeSet};
use crate::linear_model::{loss_and_grad, train_observed, ModelWeights, Provenance};
use crate::seed::{derive_seed, rng_from, Stream};

/// Largest graph for which dense propagation powers are formed.
pub const DENSE_POWER_LIMIT: usize = 5000;

const COLUMN_BLOCK: usize = 128;

/// Constants of the closeness bound, in the units of the assumptions they
/// come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Largest raw feature row norm.
    pub b_x: f64,
    /// Largest weight norm along the trajectories considered.
    pub b_w: f64,
    /// Largest row norm of `P^L` before or after deletion.
    pub p_s: f64,
    /// Largest row norm of `P^L − P_u^L`, deleted rows padded with zeros.
    pub p_d: f64,
    /// Gradient gap between the full and remaining training averages.
    pub g_est: f64,
    /// Worst residual of a deleted feature row against the remaining span.
    pub delta: f64,
    pub lambda: f64,
    pub eta: f64,
    pub epochs: usize,
    pub deleted_count: usize,
    pub node_count: usize,
}

/// Row-norm summaries of the dense propagation powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowNorms {
    pub max_before: f64,
    pub max_after: f64,
    pub max_difference: f64,
}

/// Row norms of `P^L`, `P_u^L` and their difference, formed `COLUMN_BLOCK`
/// columns at a time by propagating identity blocks.
pub fn propagation_row_norms(data: &GnnData, prop: &PropagationConfig, deleted: &NodeSet) -> Result<RowNorms> {
    let n = data.num_nodes();
    if n > DENSE_POWER_LIMIT {
        return Err(Error::TooLarge {
            num_nodes: n,
            limit: DENSE_POWER_LIMIT,
        });
    }
    if prop.multi_hop {
        return Err(Error::InvalidInput(
            "closeness constants are defined for single-power propagation, not multi-hop features".into(),
        ));
    }
    let (after, map) = delete_nodes(&data.graph, deleted)?;
    let p = build_propagation(&data.graph, prop.mode, prop.self_loops);
    let pu = build_propagation(&after, prop.mode, prop.self_loops);
    let nu = after.num_nodes();
    let starts: Vec<usize> = (0..n).step_by(COLUMN_BLOCK).collect();
    let partials: Vec<Result<[Vec<f64>; 3]>> = starts
        .par_iter()
        .map(|&c0| {
            let b = COLUMN_BLOCK.min(n - c0);
            let mut e = FeatureMatrix::zeros(n, b);
            let mut eu = FeatureMatrix::zeros(nu, b);
            for k in 0..b {
                e.row_mut(c0 + k)[k] = 1.0;
                if let Some(j) = map.new_index(c0 + k) {
                    eu.row_mut(j)[k] = 1.0;
                }
            }
            let y = propagate(&p, &e, prop.hops)?;
            let yu = propagate(&pu, &eu, prop.hops)?;
            let mut before = vec![0.0; n];
            let mut diff = vec![0.0; n];
            let mut after_sq = vec![0.0; nu];
            for i in 0..n {
                let row = y.row(i);
                before[i] = row.iter().map(|v| v * v).sum();
                diff[i] = match map.new_index(i) {
                    Some(j) => row.iter().zip(yu.row(j)).map(|(a, b)| (a - b).powi(2)).sum(),
                    None => before[i],
                };
            }
            for (j, slot) in after_sq.iter_mut().enumerate() {
                *slot = yu.row(j).iter().map(|v| v * v).sum();
            }
            Ok([before, after_sq, diff])
        })
        .collect();
    let mut before = vec![0.0; n];
    let mut after_sq = vec![0.0; nu];
    let mut diff = vec![0.0; n];
    for part in partials {
        let [b, a, d] = part?;
        before.iter_mut().zip(&b).for_each(|(s, v)| *s += v);
        after_sq.iter_mut().zip(&a).for_each(|(s, v)| *s += v);
        diff.iter_mut().zip(&d).for_each(|(s, v)| *s += v);
    }
    let max_sqrt = |v: &[f64]| v.iter().copied().fold(0.0, f64::max).sqrt();
    Ok(RowNorms {
        max_before: max_sqrt(&before),
        max_after: max_sqrt(&after_sq),
        max_difference: max_sqrt(&diff),
    })
}

/// Post-deletion inputs re-indexed to the original nodes, deleted rows zero.
fn padded_inputs(data: &GnnData, prop: &PropagationConfig, deleted: &NodeSet) -> Result<FeatureMatrix> {
    let (remaining, map) = data.delete(deleted)?;
    let hu = remaining.inputs(prop)?;
    let mut padded = FeatureMatrix::zeros(data.num_nodes(), hu.dim());
    for (new, &old) in map.kept().iter().enumerate() {
        padded.row_mut(old).copy_from_slice(hu.row(new));
    }
    Ok(padded)
}

/// `‖mean_T ∇f^u_i(w) − mean_R ∇f^u_i(w)‖` on padded post-deletion inputs.
fn gradient_gap(w: &ModelWeights, padded: &FeatureMatrix, data: &GnnData, deleted: &NodeSet) -> Result<f64> {
    let remain = data.train.difference(deleted);
    let lambda = w.lambda();
    let full = loss_and_grad(w, padded, &data.labels, &data.train, lambda)?.gradient;
    let rest = loss_and_grad(w, padded, &data.labels, &remain, lambda)?.gradient;
    Ok(norm(&crate::features::sub(&full, &rest)))
}

fn base_constants(data: &GnnData, prop: &PropagationConfig, model: &ModelWeights, deleted: &NodeSet) -> Result<BoundConstants> {
    let norms = propagation_row_norms(data, prop, deleted)?;
    let delta = if deleted.is_empty() {
        0.0
    } else {
        delta_measure(&data.features, DeltaMode::AgainstSet, Some(deleted), None)?
    };
    let p: &Provenance = &model.provenance;
    Ok(BoundConstants {
        b_x: data.features.max_row_norm(),
        b_w: model.norm(),
        p_s: norms.max_before.max(norms.max_after),
        p_d: norms.max_difference,
        g_est: 0.0,
        delta,
        lambda: p.lambda,
        eta: p.eta,
        epochs: p.epochs,
        deleted_count: deleted.len(),
        node_count: data.num_nodes(),
    })
}

/// Estimates every constant of the closeness bound for deleting `deleted`
/// from the model's training graph. `G` is the largest gradient gap at the
/// model's weights over `sample_count` random training subsets of the same
/// size as `deleted`.
pub fn estimate_constants(
    data: &GnnData,
    prop: &PropagationConfig,
    model: &ModelWeights,
    deleted: &NodeSet,
    sample_count: usize,
    seed: u64,
) -> Result<BoundConstants> {
    let mut constants = base_constants(data, prop, model, deleted)?;
    if !deleted.is_empty() {
        let pool = data.train.as_slice();
        let mut rng = rng_from(derive_seed(seed, Stream::Sampling));
        let samples: Vec<NodeSet> = (0..sample_count)
            .map(|_| pool.choose_multiple(&mut rng, deleted.len()).copied().collect())
            .collect();
        let gaps: Vec<f64> = samples
            .par_iter()
            .map(|set| gradient_gap(model, &padded_inputs(data, prop, set)?, data, set))
            .collect::<Result<_>>()?;
        constants.g_est = gaps.into_iter().fold(0.0, f64::max);
    }
    Ok(constants)
}

/// `Δ = Q Σ_{t=1..T} (1 + η(λ + B_x²P_s²))^{t−1} + δηT·|deleted|` with
/// `Q = η((1 + B_x B_w P_s) B_x P_d + G)`. The geometric sum is evaluated as
/// `expm1(T ln1p(x))/x`; overflow yields `+∞`.
pub fn theorem1_bound(c: &BoundConstants) -> f64 {
    let q = c.eta * ((1.0 + c.b_x * c.b_w * c.p_s) * c.b_x * c.p_d + c.g_est);
    let t = c.epochs as f64;
    let x = c.eta * (c.lambda + c.b_x * c.b_x * c.p_s * c.p_s);
    let drift = if q == 0.0 || c.epochs == 0 {
        0.0
    } else if x == 0.0 {
        q * t
    } else {
        let exponent = t * x.ln_1p();
        if exponent > 709.0 {
            f64::INFINITY
        } else {
            q * exponent.exp_m1() / x
        }
    };
    drift + c.delta * c.eta * t * c.deleted_count as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop2Verdict {
    pub holds: bool,
    pub threshold: f64,
}

/// Holds when `δ < ((ληT)⁻¹ + 1) B_x |V| / |deleted|`. An empty deletion or
/// a zero `ληT` gives an infinite threshold.
pub fn prop2_condition(c: &BoundConstants) -> Prop2Verdict {
    let scale = c.lambda * c.eta * c.epochs as f64;
    let threshold = if c.deleted_count == 0 || scale == 0.0 {
        f64::INFINITY
    } else {
        (1.0 / scale + 1.0) * c.b_x * c.node_count as f64 / c.deleted_count as f64
    };
    Prop2Verdict {
        holds: c.delta < threshold,
        threshold,
    }
}

/// The bound checked against an actual retrain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedBound {
    pub constants: BoundConstants,
    pub bound: f64,
    /// `‖w_u − w_p‖`.
    pub observed_distance: f64,
    /// `bound / observed_distance`.
    pub slack_ratio: f64,
    pub prop2: Prop2Verdict,
    pub retrained: ModelWeights,
    pub projected: ModelWeights,
}

/// Retrains on the remaining nodes with the model's own settings, recording
/// the retrain trajectory `w_u(t)`. `G` is the largest gradient gap seen
/// along it and `B_w` the largest weight norm among `w`, `w_u(t)`.
pub fn observed_constants(
    data: &GnnData,
    prop: &PropagationConfig,
    model: &ModelWeights,
    deleted: &NodeSet,
    ridge_eps: Option<f64>,
) -> Result<ObservedBound> {
    if model.loss == crate::linear_model::LossKind::Hinge {
        return Err(Error::Unsupported {
            operation: "observed closeness bound (gradient-descent retrain)".into(),
            loss: model.loss.name().into(),
        });
    }
    let mut constants = base_constants(data, prop, model, deleted)?;
    let padded = padded_inputs(data, prop, deleted)?;
    let (remaining, _) = data.delete(deleted)?;
    if remaining.train.is_empty() {
        return Err(Error::EmptyRemaining("no training nodes remain".into()));
    }
    let hu = remaining.inputs(prop)?;
    let init = ModelWeights::zeros_for(model.loss, &data.labels, model.dim(), Provenance::new(model.lambda()))?;
    let mut max_gap: f64 = 0.0;
    let mut max_norm: f64 = model.norm();
    let mut failure = None;
    let mut observer = |w: &ModelWeights| {
        max_norm = max_norm.max(w.norm());
        if !deleted.is_empty() {
            match gradient_gap(w, &padded, data, deleted) {
                Ok(g) => max_gap = max_gap.max(g),
                Err(e) => failure = Some(e),
            }
        }
    };
    let (retrained, _) = train_observed(
        &init,
        &hu,
        &remaining.labels,
        &remaining.train,
        &train_config_of(model),
        &mut observer,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    constants.g_est = max_gap;
    constants.b_w = max_norm;
    let (projected, _) = project_model(model, &data.features, deleted, None, ridge_eps, false)?;
    let bound = theorem1_bound(&constants);
    let observed_distance = retrained.distance(&projected);
    let slack_ratio = if observed_distance > 0.0 {
        bound / observed_distance
    } else {
        f64::INFINITY
    };
    Ok(ObservedBound {
        prop2: prop2_condition(&constants),
        constants,
        bound,
        observed_distance,
        slack_ratio,
        retrained,
        projected,
    })
}
