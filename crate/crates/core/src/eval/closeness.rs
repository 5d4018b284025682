use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::features::{dot, FeatureMatrix};
use crate::graph::NodeSet;
use crate::linear_model::{LossKind, ModelWeights};

/// How far an unlearned model is from the retrained one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    /// `‖w_u − w_p‖ / ‖w‖`.
    pub normalized_weight_diff: f64,
    /// Per named subset, the mean over its nodes of `‖a_p(h_i) − a_u(h_i)‖`
    /// where `a` is the model's output activation.
    pub activation_distance: BTreeMap<String, f64>,
    /// Subsets that were empty and therefore omitted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub empty_subsets: Vec<String>,
}

/// Output activations for node `i`: a softmax vector for softmax models, one
/// sigmoid per row otherwise.
pub fn activations(w: &ModelWeights, h: &[f64]) -> Vec<f64> {
    let scores: Vec<f64> = (0..w.rows()).map(|c| dot(w.row(c), h)).collect();
    match w.loss {
        LossKind::Softmax => {
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = exp.iter().sum();
            exp.into_iter().map(|e| e / total).collect()
        }
        _ => scores.into_iter().map(crate::linear_model::sigmoid).collect(),
    }
}

/// Weight and activation distances between the projected model `w_p` and
/// the retrained model `w_u`, normalized by the original `w`.
pub fn closeness_report(
    w: &ModelWeights,
    w_p: &ModelWeights,
    w_u: &ModelWeights,
    h: &FeatureMatrix,
    subsets: &[(String, NodeSet)],
) -> Result<ClosenessReport> {
    let shape = |m: &ModelWeights| (m.rows(), m.dim());
    if shape(w) != shape(w_p) || shape(w) != shape(w_u) || w.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "weights {:?}, {:?}, {:?} over inputs of dimension {}",
            shape(w),
            shape(w_p),
            shape(w_u),
            h.dim()
        )));
    }
    let diff = w_u.distance(w_p);
    let wn = w.norm();
    let normalized_weight_diff = if diff == 0.0 {
        0.0
    } else if wn == 0.0 {
        f64::INFINITY
    } else {
        diff / wn
    };
    let mut activation_distance = BTreeMap::new();
    let mut empty_subsets = Vec::new();
    for (name, set) in subsets {
        if let Some(index) = set.max().filter(|&m| m >= h.rows()) {
            return Err(Error::NodeOutOfRange {
                index,
                num_nodes: h.rows(),
            });
        }
        if set.is_empty() {
            empty_subsets.push(name.clone());
            continue;
        }
        let total: f64 = set
            .iter()
            .map(|i| {
                let a = activations(w_p, h.row(i));
                let b = activations(w_u, h.row(i));
                a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
            })
            .sum();
        activation_distance.insert(name.clone(), total / set.len() as f64);
    }
    Ok(ClosenessReport {
        normalized_weight_diff,
        activation_distance,
        empty_subsets,
    })
}

/// [`closeness_report`] of an unlearned model against the retrained one,
/// with the deleted nodes scored on the original graph and the remaining
/// training and test nodes on the post-deletion graph.
pub fn compare_to_retrain(
    model: &ModelWeights,
    unlearned: &ModelWeights,
    retrained: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    deleted: &NodeSet,
) -> Result<ClosenessReport> {
    let (remaining, _) = data.delete(deleted)?;
    let before = closeness_report(
        model,
        unlearned,
        retrained,
        &data.inputs(prop)?,
        &[("deleted".into(), deleted.clone())],
    )?;
    let after = closeness_report(
        model,
        unlearned,
        retrained,
        &remaining.inputs(prop)?,
        &[
            ("remaining".into(), remaining.train.clone()),
            ("test".into(), remaining.test.clone()),
        ],
    )?;
    let mut report = before;
    report.activation_distance.extend(after.activation_distance);
    report.empty_subsets.extend(after.empty_subsets);
    Ok(report)
}
