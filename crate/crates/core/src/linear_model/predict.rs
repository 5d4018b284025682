use serde::{Deserialize, Serialize};

use super::{Labels, ModelWeights};
use crate::features::{dot, FeatureMatrix};
use crate::graph::NodeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Predicted class per evaluated node (binary: 0 is −1, 1 is +1).
    pub predictions: Vec<usize>,
    /// Raw scores per evaluated node, one per weight row.
    pub scores: Vec<Vec<f64>>,
}

fn decide(scores: &[f64]) -> usize {
    if scores.len() == 1 {
        return usize::from(scores[0] > 0.0);
    }
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Sign (binary) or argmax decisions; ties go to the lower class, so a zero
/// binary score predicts −1.
pub fn predict(weights: &ModelWeights, h: &FeatureMatrix, nodes: &NodeSet) -> (Vec<usize>, Vec<Vec<f64>>) {
    nodes
        .iter()
        .map(|i| {
            let s: Vec<f64> = (0..weights.rows()).map(|c| dot(weights.row(c), h.row(i))).collect();
            (decide(&s), s)
        })
        .unzip()
}

/// Accuracy and macro F1 over the classes that occur in the labels or the
/// predictions of `nodes`. Both are 0 for an empty set.
pub fn evaluate(weights: &ModelWeights, h: &FeatureMatrix, labels: &Labels, nodes: &NodeSet) -> Evaluation {
    let (predictions, scores) = predict(weights, h, nodes);
    let truth: Vec<usize> = nodes.iter().map(|i| labels.class_of(i)).collect();
    let n = truth.len();
    let correct = truth.iter().zip(&predictions).filter(|(a, b)| a == b).count();
    let accuracy = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
    let classes = truth.iter().chain(&predictions).copied().max().map_or(0, |m| m + 1);
    let mut f1_sum = 0.0;
    let mut present = 0;
    for c in 0..classes {
        let tp = truth.iter().zip(&predictions).filter(|&(&t, &p)| t == c && p == c).count();
        let actual = truth.iter().filter(|&&t| t == c).count();
        let predicted = predictions.iter().filter(|&&p| p == c).count();
        if actual + predicted == 0 {
            continue;
        }
        present += 1;
        f1_sum += 2.0 * tp as f64 / (actual + predicted) as f64;
    }
    let macro_f1 = if present == 0 { 0.0 } else { f1_sum / present as f64 };
    Evaluation {
        accuracy,
        macro_f1,
        predictions,
        scores,
    }
}
