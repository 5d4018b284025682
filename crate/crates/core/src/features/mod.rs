//! Dense node features, Gram matrices with Woodbury downdates, and the
//! orthogonal projection onto the span of a set of feature rows.

mod gram;
mod io;
mod projection;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::seed::{derive_seed, rng_from, Stream};

pub use gram::{
    default_ridge, gram_downdate, gram_precompute, pinv_solve, read_gram, write_gram, CachedInverse,
    Downdate, DowndateStrategy, GramState,
};
pub use io::{read_features, write_features_binary, write_features_csv, FeatureFormat};
pub use projection::{
    delta_measure, project_onto_span, span_residual, DeltaMode, ProjectionResult, SpanProjector,
};

/// Dense row-major `rows × dim` matrix of finite 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{dim} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite feature at row {}, column {}",
                pos / dim.max(1),
                pos % dim.max(1)
            )));
        }
        Ok(FeatureMatrix { rows, dim, data })
    }

    /// Adds i.i.d. `N(0, scale²)` noise to every entry. With probability one
    /// no row then lies in the span of the others, so a deleted node whose
    /// features duplicated a remaining node's still moves the projection.
    pub fn with_jitter(&self, scale: f64, seed: u64) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("jitter scale must be finite and >= 0, got {scale}")));
        }
        if scale == 0.0 {
            return Ok(self.clone());
        }
        let normal = Normal::new(0.0, scale).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = rng_from(derive_seed(seed, Stream::Jitter));
        let data = self.data.iter().map(|v| v + normal.sample(&mut rng)).collect();
        FeatureMatrix::new(self.rows, self.dim, data)
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        FeatureMatrix {
            rows,
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} columns, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim.max(1)).take(self.rows)
    }

    /// Rows at the given indices, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::NodeOutOfRange {
                    index: i,
                    num_nodes: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(FeatureMatrix {
            rows: indices.len(),
            dim: self.dim,
            data,
        })
    }

    pub fn select(&self, set: &NodeSet) -> Result<Self> {
        self.select_rows(set.as_slice())
    }

    /// Horizontal concatenation.
    pub fn hcat(blocks: &[&FeatureMatrix]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch("hcat blocks differ in row count".into()));
        }
        let dim: usize = blocks.iter().map(|b| b.dim).sum();
        let mut data = Vec::with_capacity(rows * dim);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Ok(FeatureMatrix { rows, dim, data })
    }

    /// Appends one column.
    pub fn with_column(&self, column: &[f64]) -> Result<Self> {
        if column.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} for {} rows",
                column.len(),
                self.rows
            )));
        }
        let c = FeatureMatrix::new(self.rows, 1, column.to_vec())?;
        Self::hcat(&[self, &c])
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.dim + j]).collect()
    }

    pub fn max_row_norm(&self) -> f64 {
        self.row_iter().map(norm).fold(0.0, f64::max)
    }

    /// `X v` for a `dim`-vector.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `Xᵀ a` for a `rows`-vector.
    pub fn tr_matvec(&self, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (r, &ai) in self.row_iter().zip(a) {
            axpy(ai, r, &mut out);
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.dim, &self.data)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
