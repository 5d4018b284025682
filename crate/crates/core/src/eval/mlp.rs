use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::GnnData;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::NodeSet;
use crate::seed::{derive_seed, rng_from, Stream};

/// Elementwise nonlinearity between and after the two affine layers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Tanh => t.tanh(),
            Activation::Linear => t,
        }
    }

    fn derivative(self, t: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - t.tanh().powi(2),
            Activation::Linear => 1.0,
        }
    }
}

/// `z = σ(σ(x W1 + b1) W2 + b2)`, applied to each node independently.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub activation: Activation,
}

impl Mlp {
    /// Identity weights and zero biases on `dim` inputs.
    pub fn identity(dim: usize, activation: Activation) -> Self {
        Mlp {
            w1: DMatrix::identity(dim, dim),
            b1: DVector::zeros(dim),
            w2: DMatrix::identity(dim, dim),
            b2: DVector::zeros(dim),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.ncols()
    }

    fn layers(&self, x: &DMatrix<f64>) -> [DMatrix<f64>; 4] {
        let a1 = add_bias(x * &self.w1, &self.b1);
        let z1 = a1.map(|t| self.activation.apply(t));
        let a2 = add_bias(&z1 * &self.w2, &self.b2);
        let z2 = a2.map(|t| self.activation.apply(t));
        [a1, z1, a2, z2]
    }

    pub fn forward(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "MLP expects {} inputs, features have {}",
                self.input_dim(),
                x.dim()
            )));
        }
        let [.., z] = self.layers(&x.to_dmatrix());
        from_dmatrix(&z)
    }
}

fn add_bias(mut m: DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    for mut row in m.row_iter_mut() {
        row += b.transpose();
    }
    m
}

fn from_dmatrix(m: &DMatrix<f64>) -> Result<FeatureMatrix> {
    let data = (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect();
    FeatureMatrix::new(m.nrows(), m.ncols(), data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    /// Output width; 0 keeps the input width.
    #[serde(default)]
    pub output: usize,
    #[serde(default)]
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Nodes to train on; defaults to the training nodes that remain.
    #[serde(default)]
    pub train_nodes: Option<NodeSet>,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 32,
            output: 0,
            activation: Activation::Tanh,
            epochs: 100,
            learning_rate: 0.1,
            batch_size: Some(64),
            seed: 0,
            train_nodes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpMetadata {
    pub trained_on: usize,
    pub hidden: usize,
    pub output: usize,
    pub activation: Activation,
    pub final_loss: f64,
    pub caveat: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpFeatures {
    /// `MLP(X)`, one row per node of the input graph.
    pub features: FeatureMatrix,
    pub mlp: Mlp,
    pub metadata: MlpMetadata,
}

const CAVEAT: &str = "projection is exact with respect to the MLP outputs only because the MLP \
was trained without the features of any node that may later be deleted; deleting a node the \
MLP saw would leave its influence in the MLP weights";

struct Grads {
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DMatrix<f64>,
    b2: DVector<f64>,
    head: DMatrix<f64>,
    loss: f64,
}

fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_sum().transpose()
}

/// Mean softmax cross-entropy of the MLP plus a linear head on a batch, and
/// its gradients.
fn batch_grads(mlp: &Mlp, head: &DMatrix<f64>, x: &DMatrix<f64>, classes: &[usize]) -> Grads {
    let [a1, z1, a2, z2] = mlp.layers(x);
    let logits = &z2 * head;
    let b = x.nrows() as f64;
    let mut delta = logits.clone();
    let mut loss = 0.0;
    for (i, mut row) in delta.row_iter_mut().enumerate() {
        let max = row.max();
        row.apply(|v| *v = (*v - max).exp());
        let total = row.sum();
        row /= total;
        loss -= row[classes[i]].ln();
        row[classes[i]] -= 1.0;
    }
    delta /= b;
    let d_head = z2.transpose() * &delta;
    let d_a2 = (&delta * head.transpose()).component_mul(&a2.map(|t| mlp.activation.derivative(t)));
    let d_w2 = z1.transpose() * &d_a2;
    let d_a1 = (&d_a2 * mlp.w2.transpose()).component_mul(&a1.map(|t| mlp.activation.derivative(t)));
    let d_w1 = x.transpose() * &d_a1;
    Grads {
        w1: d_w1,
        b1: column_sums(&d_a1),
        w2: d_w2,
        b2: column_sums(&d_a2),
        head: d_head,
        loss: loss / b,
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-limit..=limit))
}

/// Trains a two-layer MLP with a temporary softmax head on nodes that are
/// never deleted, discards the head and returns the MLP outputs for every
/// node as new raw features.
pub fn mlp_feature_mode(data: &GnnData, remain_set: &NodeSet, config: &MlpConfig) -> Result<MlpFeatures> {
    if config.hidden == 0 {
        return Err(Error::config("hidden", "must be positive"));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::config("learning_rate", "must be finite and > 0"));
    }
    if config.batch_size == Some(0) {
        return Err(Error::config("batch_size", "must be positive"));
    }
    let n = data.num_nodes();
    if let Some(index) = remain_set.max().filter(|&m| m >= n) {
        return Err(Error::NodeOutOfRange { index, num_nodes: n });
    }
    let nodes = match &config.train_nodes {
        Some(t) if !t.is_subset(remain_set) => {
            return Err(Error::config(
                "train_nodes",
                "includes nodes outside the remaining set, so their features would leak into the MLP",
            ))
        }
        Some(t) => t.clone(),
        None => data.train.intersection(remain_set),
    };
    if nodes.is_empty() {
        return Err(Error::EmptyRemaining("no nodes to train the MLP on".into()));
    }

    let d = data.features.dim();
    let output = if config.output == 0 { d } else { config.output };
    let classes = data.labels.num_classes();
    let mut rng = rng_from(derive_seed(config.seed, Stream::Mlp));
    let mut mlp = Mlp {
        w1: glorot(d, config.hidden, &mut rng),
        b1: DVector::zeros(config.hidden),
        w2: glorot(config.hidden, output, &mut rng),
        b2: DVector::zeros(output),
        activation: config.activation,
    };
    let mut head = glorot(output, classes, &mut rng);

    let x = data.features.to_dmatrix();
    let batch = config.batch_size.unwrap_or(nodes.len()).min(nodes.len());
    let mut order = nodes.as_slice().to_vec();
    let mut final_loss = f64::NAN;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let xb = x.select_rows(chunk.iter());
            let yb: Vec<usize> = chunk.iter().map(|&i| data.labels.class_of(i)).collect();
            let g = batch_grads(&mlp, &head, &xb, &yb);
            if !g.loss.is_finite() {
                return Err(Error::Divergence { epoch, value: g.loss });
            }
            total += g.loss * chunk.len() as f64;
            let lr = config.learning_rate;
            mlp.w1 -= lr * g.w1;
            mlp.b1 -= lr * g.b1;
            mlp.w2 -= lr * g.w2;
            mlp.b2 -= lr * g.b2;
            head -= lr * g.head;
        }
        final_loss = total / order.len() as f64;
    }
    let features = mlp.forward(&data.features)?;
    Ok(MlpFeatures {
        features,
        metadata: MlpMetadata {
            trained_on: nodes.len(),
            hidden: config.hidden,
            output,
            activation: config.activation,
            final_loss,
            caveat: CAVEAT.into(),
        },
        mlp,
    })
}
