//! Convex classifiers on propagated features: binary logistic regression,
//! softmax, one-vs-rest logistic and the hinge-loss primal SVM.

mod io;
mod loss;
mod predict;
mod train;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeSet;

pub use io::{read_labels, read_model, write_labels, write_model};
pub use loss::{hessian, loss_and_grad, LossGrad};
pub(crate) use loss::sigmoid;
pub use predict::{evaluate, predict, Evaluation};
pub use train::{
    finetune, pegasos_train, train, train_observed, PegasosConfig, TrainConfig, TrainTrace,
};

/// Node labels: `±1` for binary problems, `0..classes` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    Binary(Vec<f64>),
    Multi { classes: usize, y: Vec<usize> },
}

impl Labels {
    pub fn binary(y: Vec<f64>) -> Result<Self> {
        if let Some(bad) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidInput(format!("binary label {} at node {bad} is not ±1", y[bad])));
        }
        Ok(Labels::Binary(y))
    }

    pub fn multi(y: Vec<usize>, classes: usize) -> Result<Self> {
        if let Some(bad) = y.iter().position(|&c| c >= classes) {
            return Err(Error::InvalidInput(format!(
                "class {} at node {bad} out of range for {classes} classes",
                y[bad]
            )));
        }
        Ok(Labels::Multi { classes, y })
    }

    pub fn len(&self) -> usize {
        match self {
            Labels::Binary(y) => y.len(),
            Labels::Multi { y, .. } => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Labels::Binary(_))
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Labels::Binary(_) => 2,
            Labels::Multi { classes, .. } => *classes,
        }
    }

    pub fn as_binary(&self) -> Option<&[f64]> {
        match self {
            Labels::Binary(y) => Some(y),
            Labels::Multi { .. } => None,
        }
    }

    /// Class index of node `i`; binary `-1 → 0`, `+1 → 1`.
    pub fn class_of(&self, i: usize) -> usize {
        match self {
            Labels::Binary(y) => usize::from(y[i] > 0.0),
            Labels::Multi { y, .. } => y[i],
        }
    }

    /// Labels of the listed nodes, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        match self {
            Labels::Binary(y) => Labels::Binary(indices.iter().map(|&i| y[i]).collect()),
            Labels::Multi { classes, y } => Labels::Multi {
                classes: *classes,
                y: indices.iter().map(|&i| y[i]).collect(),
            },
        }
    }

    /// Moves the nodes in `set` to a new class `C` (binary labels become
    /// classes 0/1 first).
    pub fn with_new_class(&self, set: &NodeSet) -> Self {
        let classes = self.num_classes();
        let y = (0..self.len())
            .map(|i| if set.contains(i) { classes } else { self.class_of(i) })
            .collect();
        Labels::Multi {
            classes: classes + 1,
            y,
        }
    }

    /// Flips the binary labels of the nodes in `set`.
    pub fn flipped(&self, set: &NodeSet) -> Result<Self> {
        match self {
            Labels::Binary(y) => Ok(Labels::Binary(
                y.iter()
                    .enumerate()
                    .map(|(i, &v)| if set.contains(i) { -v } else { v })
                    .collect(),
            )),
            Labels::Multi { .. } => Err(Error::InvalidInput("label flipping needs binary labels".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Logistic,
    Softmax,
    OvrLogistic,
    Hinge,
}

impl LossKind {
    pub fn code(self) -> u32 {
        match self {
            LossKind::Logistic => 0,
            LossKind::Softmax => 1,
            LossKind::OvrLogistic => 2,
            LossKind::Hinge => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            0 => LossKind::Logistic,
            1 => LossKind::Softmax,
            2 => LossKind::OvrLogistic,
            3 => LossKind::Hinge,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Softmax => "softmax",
            LossKind::OvrLogistic => "ovr_logistic",
            LossKind::Hinge => "hinge",
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, LossKind::Logistic | LossKind::Hinge)
    }

    /// Number of weight rows for labels with `classes` classes.
    pub fn rows_for(self, classes: usize) -> usize {
        if self.is_binary() {
            1
        } else {
            classes
        }
    }

    /// Checks that the loss can be trained on these labels.
    pub fn check_labels(self, labels: &Labels) -> Result<()> {
        match (self.is_binary(), labels) {
            (true, Labels::Multi { .. }) => Err(Error::Unsupported {
                operation: "multi-class labels".into(),
                loss: self.name().into(),
            }),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the weights were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub lambda: f64,
    pub eta: f64,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub init_kind: String,
    /// Free-form extras (propagation settings, unlearning steps).
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(lambda: f64) -> Self {
        Provenance {
            lambda,
            eta: 0.0,
            epochs: 0,
            batch_size: None,
            seed: 0,
            init_kind: "zero".into(),
            extra: BTreeMap::new(),
        }
    }
}

/// `C × d` weights, row-major; one row for binary losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
    pub loss: LossKind,
    pub provenance: Provenance,
}

impl ModelWeights {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>, loss: LossKind, provenance: Provenance) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch(format!("{} weights for {rows}x{dim}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite weight".into()));
        }
        if !(provenance.lambda >= 0.0) {
            return Err(Error::config("lambda", "must be >= 0"));
        }
        Ok(ModelWeights {
            rows,
            dim,
            data,
            loss,
            provenance,
        })
    }

    /// Zero weights shaped for `labels`.
    pub fn zeros_for(loss: LossKind, labels: &Labels, dim: usize, provenance: Provenance) -> Result<Self> {
        loss.check_labels(labels)?;
        let rows = loss.rows_for(labels.num_classes());
        Self::new(rows, dim, vec![0.0; rows * dim], loss, provenance)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.dim..(c + 1) * self.dim]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.dim..(c + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.provenance.lambda
    }

    /// Same shape and provenance with new values.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.rows, self.dim, data, self.loss, self.provenance.clone())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        crate::features::norm(&self.data)
    }

    /// Norm of the weight column `j` across all rows.
    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows).map(|c| self.row(c)[j].powi(2)).sum::<f64>().sqrt()
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &ModelWeights) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_transforms() {
        let l = Labels::binary(vec![1.0, -1.0, 1.0]).unwrap();
        let set = NodeSet::new(vec![1]);
        assert_eq!(l.flipped(&set).unwrap(), Labels::Binary(vec![1.0, 1.0, 1.0]));
        assert_eq!(
            l.with_new_class(&set),
            Labels::Multi {
                classes: 3,
                y: vec![1, 2, 1]
            }
        );
        assert!(Labels::binary(vec![0.0]).is_err());
        assert!(Labels::multi(vec![3], 3).is_err());
    }

    #[test]
    fn loss_codes_round_trip() {
        for k in [LossKind::Logistic, LossKind::Softmax, LossKind::OvrLogistic, LossKind::Hinge] {
            assert_eq!(LossKind::from_code(k.code()), Some(k));
        }
        assert!(LossKind::Logistic.check_labels(&Labels::Multi { classes: 3, y: vec![] }).is_err());
    }
}
