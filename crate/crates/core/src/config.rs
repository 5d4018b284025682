//! Experiment configuration: one JSON document describing the dataset,
//! propagation, training and unlearning settings, plus the root seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::features::read_features;
use crate::graph::{generate_csbm, read_edge_list, CsbmParams, NodeSet};
use crate::linear_model::{read_labels, LossKind, TrainConfig};
use crate::unlearn::{InfluenceMode, Strategy, UnlearnRequest};

/// Symmetric two-class CSBM; the graph seed is the experiment's root seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsbmSpec {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    /// Distance between the two class means.
    pub separation: f64,
    /// Per-coordinate feature standard deviation; defaults to `1/√dim`.
    #[serde(default)]
    pub noise_scale: Option<f64>,
}

impl CsbmSpec {
    pub fn params(&self, seed: u64) -> CsbmParams {
        let mut params = CsbmParams::symmetric(self.n, self.p, self.q, self.dim, self.separation, seed);
        if let Some(s) = self.noise_scale {
            params.feature_noise_scale = s;
        }
        params
    }
}

impl Default for CsbmSpec {
    fn default() -> Self {
        CsbmSpec {
            n: 300,
            p: 0.05,
            q: 0.01,
            dim: 8,
            separation: 2.0,
            noise_scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csbm(CsbmSpec),
    Files {
        edges: PathBuf,
        features: PathBuf,
        labels: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    /// Fraction of nodes in the training split; the rest are test nodes.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Std of Gaussian noise added to every raw feature after loading, so
    /// that no node's features lie in the span of the others'. Off when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_jitter: Option<f64>,
}

fn default_train_fraction() -> f64 {
    0.7
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            source: DatasetSource::Csbm(CsbmSpec::default()),
            train_fraction: default_train_fraction(),
            feature_jitter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub loss: LossKind,
    pub lambda: f64,
    pub eta: f64,
    /// Training epochs `T`.
    pub epochs: usize,
    #[serde(default)]
    pub batch_size: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            loss: LossKind::Logistic,
            lambda: 1e-2,
            eta: 0.5,
            epochs: 200,
            batch_size: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeOrder {
    Largest,
    Smallest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeRank {
    pub order: DegreeOrder,
    pub fraction: f64,
}

/// Which training nodes to delete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeleteSpec {
    RandomFraction(f64),
    ExplicitIds(Vec<usize>),
    DegreeRank(DegreeRank),
}

impl Default for DeleteSpec {
    fn default() -> Self {
        DeleteSpec::RandomFraction(0.05)
    }
}

fn fraction_count(total: usize, fraction: f64) -> usize {
    ((total as f64 * fraction).round() as usize).clamp(1, total.max(1))
}

impl DeleteSpec {
    pub fn validate(&self, field: &str) -> Result<()> {
        let fraction = match self {
            DeleteSpec::RandomFraction(f) => *f,
            DeleteSpec::DegreeRank(r) => r.fraction,
            DeleteSpec::ExplicitIds(_) => return Ok(()),
        };
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::config(field, format!("fraction {fraction} is not in (0, 1)")));
        }
        Ok(())
    }

    /// The deletion set among `data.train`. Random draws use the deletion
    /// stream of `seed`; degree ranks break ties by node index.
    pub fn select(&self, data: &GnnData, seed: u64) -> Result<NodeSet> {
        self.validate("unlearn.delete")?;
        match self {
            DeleteSpec::RandomFraction(f) => crate::eval::sample_fraction(&data.train, *f, seed),
            DeleteSpec::ExplicitIds(ids) => {
                let set = NodeSet::new(ids.clone());
                if let Some(bad) = set.iter().find(|&i| !data.train.contains(i)) {
                    return Err(Error::config(
                        "unlearn.delete.explicit_ids",
                        format!("node {bad} is not a training node"),
                    ));
                }
                Ok(set)
            }
            DeleteSpec::DegreeRank(rank) => {
                let mut order = data.train.as_slice().to_vec();
                let deg = |i: usize| data.graph.degree(i);
                match rank.order {
                    DegreeOrder::Largest => order.sort_by_key(|&i| (std::cmp::Reverse(deg(i)), i)),
                    DegreeOrder::Smallest => order.sort_by_key(|&i| (deg(i), i)),
                }
                order.truncate(fraction_count(data.train.len(), rank.fraction));
                Ok(NodeSet::new(order))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnlearnConfig {
    pub strategy: Strategy,
    #[serde(default)]
    pub delete: DeleteSpec,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub finetune_k: usize,
    #[serde(default)]
    pub ridge_eps: Option<f64>,
    #[serde(default)]
    pub influence_mode: InfluenceMode,
}

impl Default for UnlearnConfig {
    fn default() -> Self {
        UnlearnConfig {
            strategy: Strategy::Projector,
            delete: DeleteSpec::default(),
            noise_std: 0.0,
            finetune_k: 0,
            ridge_eps: None,
            influence_mode: InfluenceMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub unlearn: UnlearnConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetConfig::default(),
            propagation: PropagationConfig::default(),
            model: ModelConfig::default(),
            unlearn: UnlearnConfig::default(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }
}

fn positive_finite(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must be finite and > 0")))
    }
}

fn non_negative_finite(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("{v} must be finite and >= 0")))
    }
}

impl ExperimentConfig {
    /// Reads a config file. Relative dataset paths are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        if let (DatasetSource::Files { edges, features, labels }, Some(dir)) =
            (&mut config.dataset.source, path.parent())
        {
            for p in [edges, features, labels] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Rejects out-of-range fields and missing input files, naming the
    /// offending field.
    pub fn validate(&self) -> Result<()> {
        match &self.dataset.source {
            DatasetSource::Csbm(spec) => {
                if spec.n == 0 {
                    return Err(Error::config("dataset.source.csbm.n", "must be positive"));
                }
                if spec.dim == 0 {
                    return Err(Error::config("dataset.source.csbm.dim", "must be positive"));
                }
                for (name, v) in [("p", spec.p), ("q", spec.q)] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::config(&format!("dataset.source.csbm.{name}"), format!("{v} is not in [0, 1]")));
                    }
                }
                if spec.q > spec.p {
                    return Err(Error::config("dataset.source.csbm.q", "must not exceed p"));
                }
                non_negative_finite("dataset.source.csbm.separation", spec.separation)?;
                if let Some(s) = spec.noise_scale {
                    non_negative_finite("dataset.source.csbm.noise_scale", s)?;
                }
            }
            DatasetSource::Files { edges, features, labels } => {
                for (name, path) in [("edges", edges), ("features", features), ("labels", labels)] {
                    if !path.is_file() {
                        return Err(Error::config(
                            &format!("dataset.source.files.{name}"),
                            format!("{} does not exist", path.display()),
                        ));
                    }
                }
            }
        }
        let tf = self.dataset.train_fraction;
        if !(tf > 0.0 && tf <= 1.0) {
            return Err(Error::config("dataset.train_fraction", format!("{tf} is not in (0, 1]")));
        }
        if let Some(j) = self.dataset.feature_jitter {
            non_negative_finite("dataset.feature_jitter", j)?;
        }
        let m = &self.model;
        non_negative_finite("model.lambda", m.lambda)?;
        positive_finite("model.eta", m.eta)?;
        if m.batch_size == Some(0) {
            return Err(Error::config("model.batch_size", "must be positive"));
        }
        let u = &self.unlearn;
        u.delete.validate("unlearn.delete")?;
        non_negative_finite("unlearn.noise_std", u.noise_std)?;
        if let Some(eps) = u.ridge_eps {
            positive_finite("unlearn.ridge_eps", eps)?;
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.model.lambda,
            eta: self.model.eta,
            epochs: self.model.epochs,
            batch_size: self.model.batch_size,
            seed: self.seed,
        }
    }

    /// Loads or generates the graph and splits it with the root seed.
    pub fn load_data(&self) -> Result<GnnData> {
        let (graph, features, labels) = match &self.dataset.source {
            DatasetSource::Csbm(spec) => generate_csbm(&spec.params(self.seed))?,
            DatasetSource::Files { edges, features, labels } => {
                let x = read_features(features)?;
                let y = read_labels(labels)?;
                let g = read_edge_list(edges, Some(x.rows()))?;
                (g, x, y)
            }
        };
        let features = match self.dataset.feature_jitter {
            Some(scale) => features.with_jitter(scale, self.seed)?,
            None => features,
        };
        GnnData::random_split(graph, features, labels, self.dataset.train_fraction, self.seed)
    }

    /// Request for the configured strategy on `deleted`.
    pub fn request(&self, deleted: NodeSet) -> UnlearnRequest {
        UnlearnRequest {
            noise_std: self.unlearn.noise_std,
            finetune_k: self.unlearn.finetune_k,
            ridge_eps: self.unlearn.ridge_eps,
            seed: self.seed,
            influence_mode: self.unlearn.influence_mode,
            ..UnlearnRequest::new(deleted, self.unlearn.strategy)
        }
    }
}
