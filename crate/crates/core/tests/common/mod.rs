//! Shared helpers and dense oracles for the integration tests.
#![allow(dead_code)]

use graph_unlearn::features::FeatureMatrix;
use graph_unlearn::graph::Graph;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(n: usize, d: usize, r: &mut impl Rng) -> FeatureMatrix {
    FeatureMatrix::new(n, d, (0..n * d).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, r: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

/// Distance from `v` to the row span of `x`, by modified Gram–Schmidt with
/// a second orthogonalization pass. A row whose remainder falls below
/// `1e-10` of the largest row norm adds no basis vector.
pub fn dense_span_residual(v: &[f64], x: &FeatureMatrix) -> f64 {
    let d = x.dim();
    let scale = (0..x.rows())
        .map(|i| DVector::from_column_slice(x.row(i)).norm())
        .fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let orthogonalize = |u: &mut DVector<f64>, basis: &[DVector<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(u);
                *u -= c * b;
            }
        }
    };
    for i in 0..x.rows() {
        let mut u = DVector::from_column_slice(x.row(i));
        orthogonalize(&mut u, &basis);
        let norm = u.norm();
        if norm > 1e-10 * scale && basis.len() < d {
            basis.push(u / norm);
        }
    }
    let mut residual = DVector::from_column_slice(v);
    orthogonalize(&mut residual, &basis);
    residual.norm()
}
