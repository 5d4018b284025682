use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gram::{default_ridge, gram_precompute, RidgeSolver};
use super::{norm, sub, FeatureMatrix, GramState};
use crate::error::{Error, Result};
use crate::graph::NodeSet;

const MAX_REFINEMENTS: usize = 60;

/// Orthogonal projector onto the row span of a feature matrix, driven by
/// its Gram matrix `G_r` and a ridge solver for `G_r + εI`.
///
/// A single ridge solve only reaches the pseudo-inverse up to a factor
/// `μ/(μ+ε)` per eigenvalue `μ`. The solve is therefore iterated
/// (`z ← z + S(w − G_r z)`) until the update stalls, and the resulting
/// near-projector `F` is sharpened with `3F² − 2F³`, which squares the
/// remaining error on both the range and the null space.
pub struct SpanProjector {
    gram: DMatrix<f64>,
    solver: RidgeSolver,
    eps: f64,
}

impl SpanProjector {
    /// Projector onto span of `state`'s rows. The ridge defaults to the
    /// cached inverse's `ε`, then to [`default_ridge`].
    pub fn from_state(state: &GramState, ridge_eps: Option<f64>) -> Result<Self> {
        let eps = ridge_eps
            .or_else(|| state.cached_inverse.as_ref().map(|c| c.eps))
            .unwrap_or_else(|| default_ridge(state));
        Ok(SpanProjector {
            gram: state.gram.clone(),
            solver: RidgeSolver::factor(&state.gram, eps)?,
            eps,
        })
    }

    pub fn ridge_eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// Returns `(p, z, k)` with `p = w − (εS)^k w = G z` after `k` steps of
    /// iterated ridge refinement. Working on the residual `(εS)^k w` keeps
    /// the `1/ε`-sized null-space part of `z` out of the products with `G`.
    /// With `fixed` set exactly that many steps run, so repeated calls apply
    /// the same spectral filter.
    fn refine(&self, w: &DVector<f64>, fixed: Option<usize>) -> (DVector<f64>, DVector<f64>, usize) {
        let scale = w.norm();
        let mut residual = w.clone();
        let mut sum = DVector::zeros(w.len());
        if scale == 0.0 {
            return (sum.clone(), sum, fixed.unwrap_or(1));
        }
        let mut previous = f64::INFINITY;
        let mut steps = 0;
        while steps < fixed.unwrap_or(MAX_REFINEMENTS) {
            let next = self.solver.solve(&residual) * self.eps;
            let step = (&residual - &next).norm();
            sum += &next;
            residual = next;
            steps += 1;
            if fixed.is_none() && (step <= 1e-15 * scale || step > 0.9 * previous) {
                break;
            }
            previous = step;
        }
        (w - residual, sum / self.eps, steps)
    }

    /// `(Π w, z)` with `Π w = G z`.
    pub(crate) fn project_with_coefficients(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let w = DVector::from_column_slice(w);
        let (a, _, k) = self.refine(&w, None);
        let (b, zb, _) = self.refine(&a, Some(k));
        let (_, zc, _) = self.refine(&b, Some(k));
        // 3F²w − 2F³w, evaluated as G z so that w_p stays in the row span
        let z = zb * 3.0 - zc * 2.0;
        let wp = &self.gram * &z;
        (wp.iter().copied().collect(), z.iter().copied().collect())
    }

    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        self.project_with_coefficients(w).0
    }

    /// `‖v − Π v‖`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        norm(&sub(v, &self.project(v)))
    }
}

/// Output of [`project_onto_span`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// Coefficients over the remaining rows, `w_projected = X_rᵀ α`.
    pub alpha: Vec<f64>,
    pub w_projected: Vec<f64>,
    /// `‖X_r (w − w_projected)‖`.
    pub orthogonality_residual: f64,
    pub ridge_eps: f64,
    pub elapsed_seconds: f64,
}

/// Projects `w` onto span of the rows of `x_remain`; `gram_remain` must be
/// the Gram of exactly those rows.
pub fn project_onto_span(
    w: &[f64],
    x_remain: &FeatureMatrix,
    gram_remain: &GramState,
    ridge_eps: Option<f64>,
) -> Result<ProjectionResult> {
    let start = Instant::now();
    if x_remain.is_empty() {
        return Err(Error::EmptyRemaining(
            "projection target undefined: no remaining feature rows".into(),
        ));
    }
    if w.len() != x_remain.dim() || gram_remain.dim() != x_remain.dim() {
        return Err(Error::DimensionMismatch(format!(
            "weights of length {}, features of dimension {}, Gram of dimension {}",
            w.len(),
            x_remain.dim(),
            gram_remain.dim()
        )));
    }
    let projector = SpanProjector::from_state(gram_remain, ridge_eps)?;
    let (w_projected, z) = projector.project_with_coefficients(w);
    let alpha = x_remain.matvec(&z);
    let orthogonality_residual = norm(&x_remain.matvec(&sub(w, &w_projected)));
    Ok(ProjectionResult {
        alpha,
        w_projected,
        orthogonality_residual,
        ridge_eps: projector.ridge_eps(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// `‖v − Π_span(X)(v)‖`.
pub fn span_residual(v: &[f64], x: &FeatureMatrix, ridge_eps: Option<f64>) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptyRemaining("span of an empty matrix".into()));
    }
    if v.len() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against rows of dimension {}",
            v.len(),
            x.dim()
        )));
    }
    Ok(SpanProjector::from_state(&gram_precompute(x), ridge_eps)?.residual(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    /// Worst residual of each row against all the other rows.
    LeaveOneOutAll,
    /// Worst residual of the rows in the set against the rows outside it.
    AgainstSet,
}

/// Largest distance from a feature row to the span of the comparison rows.
pub fn delta_measure(
    x: &FeatureMatrix,
    mode: DeltaMode,
    set: Option<&NodeSet>,
    ridge_eps: Option<f64>,
) -> Result<f64> {
    let n = x.rows();
    match mode {
        DeltaMode::LeaveOneOutAll => {
            if n < 2 {
                return Err(Error::EmptyRemaining(
                    "leave-one-out delta needs at least two rows".into(),
                ));
            }
            let full = gram_precompute(x);
            let residuals = (0..n)
                .into_par_iter()
                .map(|i| {
                    let xi = x.row(i);
                    let mut gram = full.gram.clone();
                    for a in 0..xi.len() {
                        for b in 0..xi.len() {
                            gram[(a, b)] -= xi[a] * xi[b];
                        }
                    }
                    let state = GramState {
                        gram,
                        source_rows: n - 1,
                        cached_inverse: None,
                    };
                    let eps = ridge_eps.unwrap_or_else(|| default_ridge(&state));
                    Ok(SpanProjector::from_state(&state, Some(eps))?.residual(xi))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(residuals.into_iter().fold(0.0, f64::max))
        }
        DeltaMode::AgainstSet => {
            let set = set.ok_or_else(|| {
                Error::InvalidInput("against_set delta requires a node set".into())
            })?;
            if let Some(index) = set.max().filter(|&m| m >= n) {
                return Err(Error::NodeOutOfRange { index, num_nodes: n });
            }
            if set.is_empty() {
                return Ok(0.0);
            }
            let remain = set.complement(n);
            if remain.is_empty() {
                return Err(Error::EmptyRemaining("every row is in the deleted set".into()));
            }
            let state = GramState::of_rows(x, remain.as_slice())?;
            let projector = SpanProjector::from_state(&state, ridge_eps)?;
            Ok(set
                .iter()
                .map(|j| projector.residual(x.row(j)))
                .fold(0.0, f64::max))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, dim: usize, seed: u64) -> FeatureMatrix {
        let mut rng = crate::seed::rng_from(seed);
        FeatureMatrix::new(rows, dim, (0..rows * dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Least-squares oracle: min ‖X_rᵀ a − w‖ by dense QR on X_rᵀ (column
    /// pivoting is not needed for full-column-rank random draws).
    fn lstsq_projection(x: &FeatureMatrix, w: &[f64]) -> Vec<f64> {
        let a = x.to_dmatrix().transpose(); // d×r
        let svd = a.clone().svd(true, true);
        let coef = svd.solve(&DVector::from_column_slice(w), 1e-12).unwrap();
        (a * coef).iter().copied().collect()
    }

    #[test]
    fn remaining_row_is_fixed_point() {
        let x = random_matrix(5, 4, 1);
        let w = x.row(2).to_vec();
        let r = project_onto_span(&w, &x, &gram_precompute(&x), None).unwrap();
        for (a, b) in r.w_projected.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(r.orthogonality_residual < 1e-12);
    }

    #[test]
    fn coordinate_drop() {
        let x = FeatureMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let r = project_onto_span(&[1.0, 1.0, 1.0], &x, &gram_precompute(&x), None).unwrap();
        assert!((r.w_projected[0] - 1.0).abs() < 1e-14);
        assert!((r.w_projected[1] - 1.0).abs() < 1e-14);
        assert_eq!(r.w_projected[2], 0.0);
    }

    #[test]
    fn matches_least_squares_oracle() {
        let x = random_matrix(8, 4, 2);
        let w = [0.5, -1.5, 2.0, 0.25];
        let r = project_onto_span(&w, &x, &gram_precompute(&x), None).unwrap();
        let oracle = lstsq_projection(&x, &w);
        for (a, b) in r.w_projected.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8);
        }
        // rank-deficient case: 3 rows in R^6
        let x = random_matrix(3, 6, 3);
        let w = [1.0, 2.0, -1.0, 0.0, 0.5, -0.5];
        let r = project_onto_span(&w, &x, &gram_precompute(&x), None).unwrap();
        let oracle = lstsq_projection(&x, &w);
        for (a, b) in r.w_projected.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
        let via_alpha = x.tr_matvec(&r.alpha);
        for (a, b) in via_alpha.iter().zip(&r.w_projected) {
            assert!((a - b).abs() <= 1e-10 * norm(&r.w_projected));
        }
    }

    #[test]
    fn empty_remaining_is_an_error() {
        let x = FeatureMatrix::zeros(0, 3);
        let err = project_onto_span(&[1.0, 0.0, 0.0], &x, &gram_precompute(&x), None).unwrap_err();
        assert!(matches!(err, Error::EmptyRemaining(_)));
    }

    #[test]
    fn span_residual_cases() {
        let x = random_matrix(3, 5, 4);
        assert!(span_residual(x.row(1), &x, None).unwrap() < 1e-12);
        let e = FeatureMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!((span_residual(&[0.0, 0.0, 3.0], &e, None).unwrap() - 3.0).abs() < 1e-14);
        let w = [0.1, 0.2, -0.3, 0.4, 0.9];
        let oracle = norm(&sub(&w, &lstsq_projection(&x, &w)));
        assert!((span_residual(&w, &x, None).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn delta_trivial_cases() {
        let same = FeatureMatrix::from_rows(&vec![vec![0.3, -1.0, 2.0]; 6]).unwrap();
        assert!(delta_measure(&same, DeltaMode::LeaveOneOutAll, None, None).unwrap() < 1e-10);
        let id = FeatureMatrix::identity(5);
        let d = delta_measure(&id, DeltaMode::LeaveOneOutAll, None, None).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let one = FeatureMatrix::identity(1);
        assert!(delta_measure(&one, DeltaMode::LeaveOneOutAll, None, None).is_err());
    }

    #[test]
    fn delta_matches_per_node_oracle() {
        let x = random_matrix(12, 4, 5);
        let mut expected: f64 = 0.0;
        for i in 0..12 {
            let others: Vec<usize> = (0..12).filter(|&j| j != i).collect();
            let xr = x.select_rows(&others).unwrap();
            let p = lstsq_projection(&xr, x.row(i));
            expected = expected.max(norm(&sub(x.row(i), &p)));
        }
        let got = delta_measure(&x, DeltaMode::LeaveOneOutAll, None, None).unwrap();
        assert!((got - expected).abs() < 1e-8);
        // 12 rows in R^4 span everything
        assert!(got < 1e-8);
        let x = random_matrix(6, 8, 6);
        let set = NodeSet::new(vec![1, 4]);
        let rest = x.select(&set.complement(6)).unwrap();
        let oracle = set
            .iter()
            .map(|j| norm(&sub(x.row(j), &lstsq_projection(&rest, x.row(j)))))
            .fold(0.0, f64::max);
        let got = delta_measure(&x, DeltaMode::AgainstSet, Some(&set), None).unwrap();
        assert!((got - oracle).abs() < 1e-8);
    }
}
