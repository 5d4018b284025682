use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linear_model::Labels;
use crate::seed::{derive_seed, rng_from, Stream};

/// Parameters of a two-class contextual stochastic block model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsbmParams {
    pub n: usize,
    /// Intra-class edge probability.
    pub p: f64,
    /// Inter-class edge probability.
    pub q: f64,
    pub mu_plus: Vec<f64>,
    pub mu_minus: Vec<f64>,
    /// Per-coordinate standard deviation of the features.
    pub feature_noise_scale: f64,
    pub seed: u64,
}

impl CsbmParams {
    /// Means `±separation/(2√d)·1`, so the class means sit `separation` apart,
    /// and noise `1/√d` (covariance `I/d`).
    pub fn symmetric(n: usize, p: f64, q: f64, dim: usize, separation: f64, seed: u64) -> Self {
        let c = separation / (2.0 * (dim.max(1) as f64).sqrt());
        CsbmParams {
            n,
            p,
            q,
            mu_plus: vec![c; dim],
            mu_minus: vec![-c; dim],
            feature_noise_scale: 1.0 / (dim.max(1) as f64).sqrt(),
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu_plus.len()
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.p) {
            return Err(Error::config("p", format!("{} not in [0,1]", self.p)));
        }
        if !in_unit(self.q) {
            return Err(Error::config("q", format!("{} not in [0,1]", self.q)));
        }
        if self.q > self.p {
            return Err(Error::config(
                "q",
                format!("inter-class probability {} exceeds intra-class {}", self.q, self.p),
            ));
        }
        if self.mu_plus.len() != self.mu_minus.len() {
            return Err(Error::config(
                "mu_minus",
                format!("dimension {} differs from mu_plus {}", self.mu_minus.len(), self.mu_plus.len()),
            ));
        }
        if self.mu_plus.is_empty() {
            return Err(Error::config("mu_plus", "feature dimension must be positive"));
        }
        if !(self.feature_noise_scale >= 0.0 && self.feature_noise_scale.is_finite()) {
            return Err(Error::config("feature_noise_scale", "must be finite and >= 0"));
        }
        if self.mu_plus.iter().chain(&self.mu_minus).any(|v| !v.is_finite()) {
            return Err(Error::config("mu_plus", "means must be finite"));
        }
        if self.n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        Ok(())
    }
}

/// Samples labels, then edges pair by pair, then features. Labels, edges and
/// features draw from separate seeded streams.
pub fn generate_csbm(params: &CsbmParams) -> Result<(Graph, FeatureMatrix, Labels)> {
    params.validate()?;
    let n = params.n;
    let root = derive_seed(params.seed, Stream::Graph);
    let mut label_rng = rng_from(root ^ 0x1);
    let mut edge_rng = rng_from(root ^ 0x2);
    let mut feat_rng = rng_from(root ^ 0x3);

    let labels: Vec<f64> = (0..n)
        .map(|_| if label_rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let prob = if labels[i] == labels[j] { params.p } else { params.q };
            // draw unconditionally so the stream layout is independent of p, q
            let u: f64 = edge_rng.random();
            if u < prob {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;

    let d = params.dim();
    let noise = Normal::new(0.0, params.feature_noise_scale)
        .map_err(|e| Error::config("feature_noise_scale", e.to_string()))?;
    let mut data = Vec::with_capacity(n * d);
    for &y in &labels {
        let mu = if y > 0.0 { &params.mu_plus } else { &params.mu_minus };
        data.extend(mu.iter().map(|m| m + noise.sample(&mut feat_rng)));
    }
    let x = FeatureMatrix::new(n, d, data)?;
    Ok((graph, x, Labels::Binary(labels)))
}
