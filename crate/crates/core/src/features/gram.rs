use std::path::Path;

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Minimum eigenvalue of the Woodbury capacitance matrix below which the
/// deleted rows are treated as exhausting a span direction.
const CAPACITANCE_TOL: f64 = 1e-6;

/// `(G + εI)⁻¹` together with the `ε` it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedInverse {
    pub eps: f64,
    pub inverse: DMatrix<f64>,
}

/// Gram matrix `XᵀX` of the rows accumulated so far.
#[derive(Debug, Clone, PartialEq)]
pub struct GramState {
    pub gram: DMatrix<f64>,
    pub source_rows: usize,
    pub cached_inverse: Option<CachedInverse>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DowndateStrategy {
    #[default]
    Woodbury,
    Direct,
}

/// Result of [`gram_downdate`]: the new state and which path produced it.
#[derive(Debug, Clone)]
pub struct Downdate {
    pub state: GramState,
    pub strategy_used: DowndateStrategy,
    /// Set when a Woodbury request was served by the direct path.
    pub fallback: Option<String>,
}

/// Upper-triangle accumulation in row order, mirrored afterwards so the
/// result is exactly symmetric. Rows are visited in the order given, which
/// makes a later downdate by the same rows cancel bit-for-bit on columns
/// that only those rows touch.
fn accumulate<'a>(rows: impl Iterator<Item = &'a [f64]>, d: usize) -> (DMatrix<f64>, usize) {
    let mut g = vec![0.0; d * d];
    let mut count = 0;
    for row in rows {
        count += 1;
        for (a, &xa) in row.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            let dst = &mut g[a * d + a..a * d + d];
            for (slot, &xb) in dst.iter_mut().zip(&row[a..]) {
                *slot += xa * xb;
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            g[a * d + b] = g[b * d + a];
        }
    }
    (DMatrix::from_row_slice(d, d, &g), count)
}

/// `G = XᵀX` in one pass over the rows.
pub fn gram_precompute(x: &FeatureMatrix) -> GramState {
    let (gram, source_rows) = accumulate(x.row_iter(), x.dim());
    GramState {
        gram,
        source_rows,
        cached_inverse: None,
    }
}

impl GramState {
    /// Gram of the listed rows of `x`, accumulated in the listed order.
    pub fn of_rows(x: &FeatureMatrix, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= x.rows()) {
            return Err(Error::NodeOutOfRange {
                index: bad,
                num_nodes: x.rows(),
            });
        }
        let (gram, source_rows) = accumulate(indices.iter().map(|&i| x.row(i)), x.dim());
        Ok(GramState {
            gram,
            source_rows,
            cached_inverse: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.gram.trace()
    }

    /// Caches `(G + εI)⁻¹`; `None` uses [`default_ridge`].
    pub fn with_inverse(mut self, eps: Option<f64>) -> Result<Self> {
        let eps = eps.unwrap_or_else(|| default_ridge(&self));
        let chol = ridge_cholesky(&self.gram, eps)?;
        let mut inverse = chol.inverse();
        symmetrize(&mut inverse);
        self.cached_inverse = Some(CachedInverse { eps, inverse });
        Ok(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.gram.clone()).eigenvalues.min()
    }
}

/// `1e-8 · trace(G)/d`, or 1 when the trace vanishes.
pub fn default_ridge(state: &GramState) -> f64 {
    let d = state.dim();
    let tr = state.trace();
    if d == 0 || tr <= 0.0 {
        1.0
    } else {
        1e-8 * tr / d as f64
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn ridge_cholesky(gram: &DMatrix<f64>, eps: f64) -> Result<nalgebra::Cholesky<f64, Dyn>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("ridge eps must be positive, got {eps}")));
    }
    let mut a = gram.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += eps;
    }
    nalgebra::Cholesky::new(a).ok_or_else(|| {
        Error::Factorization(format!(
            "G + {eps:e} I is not positive definite; the Gram matrix is severely indefinite"
        ))
    })
}

/// Applies `(G + εI)⁻¹` through a Cholesky factor. An explicit inverse is
/// deliberately not used here: its rounding error is unstructured and leaks
/// into the range of `G` at the `1e-7` level for ill-conditioned systems.
pub(crate) struct RidgeSolver(nalgebra::Cholesky<f64, Dyn>);

impl RidgeSolver {
    pub(crate) fn factor(gram: &DMatrix<f64>, eps: f64) -> Result<Self> {
        Ok(RidgeSolver(ridge_cholesky(gram, eps)?))
    }

    pub(crate) fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.0.solve(rhs)
    }
}

/// `(G + εI)⁻¹ rhs` by Cholesky with one step of iterative refinement. As
/// `ε → 0` this tends to `G† rhs` on the range of `G`.
pub fn pinv_solve(state: &GramState, rhs: &[f64], ridge_eps: f64) -> Result<Vec<f64>> {
    if rhs.len() != state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rhs of length {} for a {}x{} Gram",
            rhs.len(),
            state.dim(),
            state.dim()
        )));
    }
    let solver = RidgeSolver::factor(&state.gram, ridge_eps)?;
    let b = DVector::from_column_slice(rhs);
    let mut z = solver.solve(&b);
    let r = &b - (&state.gram * &z + &z * ridge_eps);
    z += solver.solve(&r);
    Ok(z.iter().copied().collect())
}

/// Removes the rows of `x_delete` from the state.
///
/// The Woodbury path updates the cached inverse through the `m×m`
/// capacitance system `I − X_d A⁻¹ X_dᵀ`; a request without a cached inverse
/// is served by the direct path and flagged. The direct path subtracts
/// `X_dᵀX_d` and refactors the inverse if one was cached.
pub fn gram_downdate(
    state: &GramState,
    x_delete: &FeatureMatrix,
    strategy: DowndateStrategy,
) -> Result<Downdate> {
    let d = state.dim();
    if x_delete.rows() > 0 && x_delete.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "deleting rows of dimension {} from a {d}x{d} Gram",
            x_delete.dim()
        )));
    }
    if x_delete.rows() > state.source_rows {
        return Err(Error::InvalidInput(format!(
            "deleting {} rows from a Gram of {} rows",
            x_delete.rows(),
            state.source_rows
        )));
    }
    if x_delete.rows() == 0 {
        return Ok(Downdate {
            state: state.clone(),
            strategy_used: strategy,
            fallback: None,
        });
    }
    let (gd, m) = accumulate(x_delete.row_iter(), d);
    let gram = &state.gram - gd;
    let source_rows = state.source_rows - m;

    let (strategy_used, fallback) = match (strategy, &state.cached_inverse) {
        (DowndateStrategy::Woodbury, Some(_)) => (DowndateStrategy::Woodbury, None),
        (DowndateStrategy::Woodbury, None) => (
            DowndateStrategy::Direct,
            Some("no cached inverse; used direct downdate".to_string()),
        ),
        (DowndateStrategy::Direct, _) => (DowndateStrategy::Direct, None),
    };

    let cached_inverse = match (&state.cached_inverse, strategy_used) {
        (None, _) => None,
        (Some(c), DowndateStrategy::Direct) => {
            let mut inverse = ridge_cholesky(&gram, c.eps)?.inverse();
            symmetrize(&mut inverse);
            Some(CachedInverse { eps: c.eps, inverse })
        }
        (Some(c), DowndateStrategy::Woodbury) => Some(CachedInverse {
            eps: c.eps,
            inverse: woodbury_inverse(&c.inverse, x_delete)?,
        }),
    };
    Ok(Downdate {
        state: GramState {
            gram,
            source_rows,
            cached_inverse,
        },
        strategy_used,
        fallback,
    })
}

/// `(A − UᵀU)⁻¹ = A⁻¹ + A⁻¹Uᵀ (I − U A⁻¹ Uᵀ)⁻¹ U A⁻¹`.
fn woodbury_inverse(a_inv: &DMatrix<f64>, u: &FeatureMatrix) -> Result<DMatrix<f64>> {
    let m = u.rows();
    let u = u.to_dmatrix();
    let b = &u * a_inv; // U A⁻¹, m×d
    let mut cap = DMatrix::identity(m, m) - &b * u.transpose();
    symmetrize(&mut cap);
    let eig = SymmetricEigen::new(cap.clone());
    let min_eigenvalue = eig.eigenvalues.min();
    if !(min_eigenvalue > CAPACITANCE_TOL) {
        return Err(Error::CapacitanceSingular { min_eigenvalue });
    }
    let cap_chol = nalgebra::Cholesky::new(cap)
        .ok_or(Error::CapacitanceSingular { min_eigenvalue })?;
    let correction = b.transpose() * cap_chol.solve(&b);
    let mut inv = a_inv + correction;
    symmetrize(&mut inv);
    Ok(inv)
}

const GRAM_MAGIC: &[u8; 4] = b"UGRM";

/// Binary layout: magic, u32 d, u64 source_rows, u8 has_inverse, f64 eps,
/// then `G` and (if present) the inverse, row-major little-endian.
pub fn write_gram(state: &GramState, path: &Path) -> Result<()> {
    let d = state.dim();
    let mut out = Vec::with_capacity(25 + 16 * d * d);
    out.extend_from_slice(GRAM_MAGIC);
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(state.source_rows as u64).to_le_bytes());
    out.push(u8::from(state.cached_inverse.is_some()));
    let eps = state.cached_inverse.as_ref().map_or(0.0, |c| c.eps);
    out.extend_from_slice(&eps.to_le_bytes());
    let mut put = |m: &DMatrix<f64>| {
        for i in 0..d {
            for j in 0..d {
                out.extend_from_slice(&m[(i, j)].to_le_bytes());
            }
        }
    };
    put(&state.gram);
    if let Some(c) = &state.cached_inverse {
        put(&c.inverse);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_gram(path: &Path) -> Result<GramState> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 25 || &bytes[..4] != GRAM_MAGIC {
        return Err(Error::parse(path, "not a Gram file (bad magic)"));
    }
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let source_rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let has_inverse = bytes[16] == 1;
    let eps = f64::from_le_bytes(bytes[17..25].try_into().unwrap());
    let blocks = if has_inverse { 2 } else { 1 };
    if bytes.len() != 25 + blocks * 8 * d * d {
        return Err(Error::parse(path, "Gram file length does not match header"));
    }
    let mut values = bytes[25..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = || DMatrix::from_row_iterator(d, d, values.by_ref().take(d * d));
    let gram = take();
    let cached_inverse = has_inverse.then(|| CachedInverse {
        eps,
        inverse: take(),
    });
    Ok(GramState {
        gram,
        source_rows,
        cached_inverse,
    })
}
