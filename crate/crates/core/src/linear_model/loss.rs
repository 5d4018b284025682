use nalgebra::DMatrix;

use super::{Labels, LossKind, ModelWeights};
use crate::error::{Error, Result};
use crate::features::{axpy, dot, FeatureMatrix};
use crate::graph::NodeSet;

/// Objective value and gradient (same `C × d` layout as the weights).
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub objective: f64,
    pub gradient: Vec<f64>,
}

impl LossGrad {
    pub fn gradient_norm(&self) -> f64 {
        crate::features::norm(&self.gradient)
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `±1` target of node `i` for weight row `row`.
pub(crate) fn binary_target(loss: LossKind, labels: &Labels, i: usize, row: usize) -> f64 {
    match (loss, labels) {
        (_, Labels::Binary(y)) => y[i],
        (_, Labels::Multi { y, .. }) => {
            if y[i] == row {
                1.0
            } else {
                -1.0
            }
        }
    }
}

pub(crate) fn check_inputs(weights: &ModelWeights, h: &FeatureMatrix, labels: &Labels, nodes: &[usize]) -> Result<()> {
    weights.loss.check_labels(labels)?;
    if weights.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "weights of dimension {} against features of dimension {}",
            weights.dim(),
            h.dim()
        )));
    }
    if weights.rows() != weights.loss.rows_for(labels.num_classes()) {
        return Err(Error::DimensionMismatch(format!(
            "{} weight rows for {} loss with {} classes",
            weights.rows(),
            weights.loss,
            labels.num_classes()
        )));
    }
    let limit = h.rows().min(labels.len());
    if let Some(&bad) = nodes.iter().find(|&&i| i >= limit) {
        return Err(Error::NodeOutOfRange {
            index: bad,
            num_nodes: limit,
        });
    }
    Ok(())
}

/// Mean data loss plus `λ/2 ‖W‖²` over `nodes`, without input checks.
pub(crate) fn objective_on(weights: &ModelWeights, h: &FeatureMatrix, labels: &Labels, nodes: &[usize], lambda: f64) -> LossGrad {
    let rows = weights.rows();
    let d = weights.dim();
    let mut total = 0.0;
    let mut grad = vec![0.0; rows * d];
    let mut scores = vec![0.0; rows];
    let mut coef = vec![0.0; rows];
    for &i in nodes {
        let hi = h.row(i);
        for (c, s) in scores.iter_mut().enumerate() {
            *s = dot(weights.row(c), hi);
        }
        match weights.loss {
            LossKind::Logistic | LossKind::OvrLogistic => {
                for c in 0..rows {
                    let y = binary_target(weights.loss, labels, i, c);
                    let z = y * scores[c];
                    total += softplus(-z);
                    coef[c] = -y * sigmoid(-z);
                }
            }
            LossKind::Hinge => {
                let y = binary_target(weights.loss, labels, i, 0);
                let z = y * scores[0];
                total += (1.0 - z).max(0.0);
                coef[0] = if z < 1.0 { -y } else { 0.0 };
            }
            LossKind::Softmax => {
                let target = labels.class_of(i);
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
                let lse = max + z.ln();
                total += lse - scores[target];
                for c in 0..rows {
                    coef[c] = (scores[c] - lse).exp() - f64::from(u8::from(c == target));
                }
            }
        }
        for c in 0..rows {
            if coef[c] != 0.0 {
                axpy(coef[c], hi, &mut grad[c * d..(c + 1) * d]);
            }
        }
    }
    let inv = if nodes.is_empty() { 0.0 } else { 1.0 / nodes.len() as f64 };
    for (g, w) in grad.iter_mut().zip(weights.data()) {
        *g = *g * inv + lambda * w;
    }
    let reg = 0.5 * lambda * dot(weights.data(), weights.data());
    LossGrad {
        objective: total * inv + reg,
        gradient: grad,
    }
}

/// Regularized mean loss over `train` and its (sub)gradient.
pub fn loss_and_grad(
    weights: &ModelWeights,
    h: &FeatureMatrix,
    labels: &Labels,
    train: &NodeSet,
    lambda: f64,
) -> Result<LossGrad> {
    check_inputs(weights, h, labels, train.as_slice())?;
    Ok(objective_on(weights, h, labels, train.as_slice(), lambda))
}

/// `λI + mean s(1−s) h hᵀ` per weight row, `s = σ(y wᵀh)`. One matrix for
/// binary logistic, one per class for one-vs-rest.
pub fn hessian(
    weights: &ModelWeights,
    h: &FeatureMatrix,
    labels: &Labels,
    nodes: &NodeSet,
    lambda: f64,
) -> Result<Vec<DMatrix<f64>>> {
    if !matches!(weights.loss, LossKind::Logistic | LossKind::OvrLogistic) {
        return Err(Error::Unsupported {
            operation: "hessian".into(),
            loss: weights.loss.name().into(),
        });
    }
    check_inputs(weights, h, labels, nodes.as_slice())?;
    let d = weights.dim();
    let inv = if nodes.is_empty() { 0.0 } else { 1.0 / nodes.len() as f64 };
    let mut out = Vec::with_capacity(weights.rows());
    for c in 0..weights.rows() {
        let mut acc = vec![0.0; d * d];
        for i in nodes.iter() {
            let hi = h.row(i);
            let s = sigmoid(dot(weights.row(c), hi));
            let k = s * (1.0 - s) * inv;
            for a in 0..d {
                let ka = k * hi[a];
                if ka == 0.0 {
                    continue;
                }
                for b in a..d {
                    acc[a * d + b] += ka * hi[b];
                }
            }
        }
        let mut m = DMatrix::zeros(d, d);
        for a in 0..d {
            m[(a, a)] = acc[a * d + a] + lambda;
            for b in a + 1..d {
                m[(a, b)] = acc[a * d + b];
                m[(b, a)] = acc[a * d + b];
            }
        }
        out.push(m);
    }
    Ok(out)
}
