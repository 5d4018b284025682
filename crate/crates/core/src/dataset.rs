//! A node-classification dataset and the propagation settings that turn it
//! into model inputs.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{
    build_propagation, delete_nodes, multi_hop_features, propagate, Graph, IndexMap, NodeSet,
    NormalizationMode,
};
use crate::linear_model::Labels;
use crate::seed::{derive_seed, rng_from, Stream};

/// How raw features become model inputs: `H = P^L X`, or the concatenation
/// `[X | PX | … | P^L X]` when `multi_hop` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationConfig {
    pub mode: NormalizationMode,
    pub hops: usize,
    pub self_loops: bool,
    pub multi_hop: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            mode: NormalizationMode::RowNormalized,
            hops: 2,
            self_loops: false,
            multi_hop: false,
        }
    }
}

impl PropagationConfig {
    pub fn new(hops: usize) -> Self {
        PropagationConfig {
            hops,
            ..Self::default()
        }
    }

    /// Number of raw-feature blocks in each model input row.
    pub fn blocks(&self) -> usize {
        if self.multi_hop {
            self.hops + 1
        } else {
            1
        }
    }

    /// Model inputs for every node of `graph`.
    pub fn features(&self, graph: &Graph, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let p = build_propagation(graph, self.mode, self.self_loops);
        if self.multi_hop {
            multi_hop_features(&p, x, self.hops + 1)
        } else {
            propagate(&p, x, self.hops)
        }
    }
}

/// Graph, raw features, labels and the train/test split, all indexed by
/// node.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnData {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: Labels,
    pub train: NodeSet,
    pub test: NodeSet,
}

impl GnnData {
    pub fn new(
        graph: Graph,
        features: FeatureMatrix,
        labels: Labels,
        train: NodeSet,
        test: NodeSet,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n || labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} nodes, {} feature rows, {} labels",
                features.rows(),
                labels.len()
            )));
        }
        for (name, set) in [("train", &train), ("test", &test)] {
            if let Some(max) = set.max().filter(|&m| m >= n) {
                return Err(Error::config(name, format!("node {max} out of range for {n} nodes")));
            }
        }
        if !train.intersection(&test).is_empty() {
            return Err(Error::config("train", "train and test sets overlap"));
        }
        Ok(GnnData {
            graph,
            features,
            labels,
            train,
            test,
        })
    }

    /// Seeded split: `train_fraction` of the nodes train, the rest test.
    pub fn random_split(
        graph: Graph,
        features: FeatureMatrix,
        labels: Labels,
        train_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction <= 1.0) {
            return Err(Error::config("train_fraction", "must lie in (0, 1]"));
        }
        let n = graph.num_nodes();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng_from(derive_seed(seed, Stream::Split)));
        let cut = ((n as f64) * train_fraction).round() as usize;
        let train = NodeSet::new(order[..cut].to_vec());
        let test = NodeSet::new(order[cut..].to_vec());
        Self::new(graph, features, labels, train, test)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Model inputs on this graph.
    pub fn inputs(&self, prop: &PropagationConfig) -> Result<FeatureMatrix> {
        prop.features(&self.graph, &self.features)
    }

    /// The dataset with `deleted` removed from graph, features, labels and
    /// splits, plus the old-to-new index map.
    pub fn delete(&self, deleted: &NodeSet) -> Result<(GnnData, IndexMap)> {
        let (graph, map) = delete_nodes(&self.graph, deleted)?;
        let kept = map.kept();
        let data = GnnData {
            graph,
            features: self.features.select_rows(kept)?,
            labels: self.labels.select(kept),
            train: map.map_set(&self.train.difference(deleted)),
            test: map.map_set(&self.test.difference(deleted)),
        };
        Ok((data, map))
    }

    /// Same dataset with different labels.
    pub fn with_labels(&self, labels: Labels) -> Result<Self> {
        Self::new(
            self.graph.clone(),
            self.features.clone(),
            labels,
            self.train.clone(),
            self.test.clone(),
        )
    }

    /// Same dataset with different raw features.
    pub fn with_features(&self, features: FeatureMatrix) -> Result<Self> {
        Self::new(
            self.graph.clone(),
            features,
            self.labels.clone(),
            self.train.clone(),
            self.test.clone(),
        )
    }
}
