use std::time::Instant;

use super::{Diagnostics, Strategy, UnlearnRequest, UnlearnResult};
use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::features::{
    default_ridge, gram_downdate, gram_precompute, norm, sub, DowndateStrategy, FeatureMatrix, GramState,
    SpanProjector,
};
use crate::graph::NodeSet;
use crate::linear_model::{finetune, ModelWeights};

/// Relative distance from the training span above which the projector warns
/// that its precondition does not hold.
pub const SPAN_WARN_TOLERANCE: f64 = 1e-4;

/// Gram of the remaining rows: built from them directly (`gram = None`), or
/// downdated from a precomputed full Gram with Woodbury, falling back to the
/// direct build when the capacitance system is singular.
fn remaining_gram(
    x: &FeatureMatrix,
    deleted: &NodeSet,
    remain: &NodeSet,
    gram: Option<&GramState>,
    diagnostics: &mut Diagnostics,
) -> Result<(GramState, GramState)> {
    let x_delete = x.select(deleted)?;
    match gram {
        None => {
            let remaining = GramState::of_rows(x, remain.as_slice())?;
            let full = GramState {
                gram: &remaining.gram + &gram_precompute(&x_delete).gram,
                source_rows: x.rows(),
                cached_inverse: None,
            };
            diagnostics.gram_path = Some("direct".into());
            Ok((remaining, full))
        }
        Some(full) => {
            if full.dim() != x.dim() || full.source_rows != x.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "precomputed Gram of dimension {} over {} rows; features are {}x{}",
                    full.dim(),
                    full.source_rows,
                    x.rows(),
                    x.dim()
                )));
            }
            match gram_downdate(full, &x_delete, DowndateStrategy::Woodbury) {
                Ok(down) => {
                    diagnostics.gram_path = Some(
                        match down.strategy_used {
                            DowndateStrategy::Woodbury => "woodbury",
                            DowndateStrategy::Direct => "direct",
                        }
                        .into(),
                    );
                    diagnostics.fallback = down.fallback;
                    Ok((down.state, full.clone()))
                }
                Err(Error::CapacitanceSingular { min_eigenvalue }) => {
                    log::warn!(
                        "woodbury capacitance singular (min eigenvalue {min_eigenvalue:e}); rebuilding the remaining Gram directly"
                    );
                    diagnostics.gram_path = Some("direct".into());
                    diagnostics.fallback = Some(format!(
                        "capacitance singular (min eigenvalue {min_eigenvalue:e}); remaining Gram rebuilt from rows"
                    ));
                    Ok((GramState::of_rows(x, remain.as_slice())?, full.clone()))
                }
                Err(e) => Err(e),
            }
        }
    }
}

/// Projects every weight row, block by block, onto the span of the raw
/// features of the nodes outside `deleted`. With `gram` present the
/// remaining Gram is obtained by a Woodbury downdate of it; otherwise it is
/// built from the remaining rows.
pub fn project_model(
    model: &ModelWeights,
    x: &FeatureMatrix,
    deleted: &NodeSet,
    gram: Option<&GramState>,
    ridge_eps: Option<f64>,
    keep_alpha: bool,
) -> Result<(ModelWeights, Diagnostics)> {
    let n = x.rows();
    let d = x.dim();
    if d == 0 || !model.dim().is_multiple_of(d) {
        return Err(Error::DimensionMismatch(format!(
            "model dimension {} is not a multiple of feature dimension {d}",
            model.dim()
        )));
    }
    if let Some(index) = deleted.max().filter(|&m| m >= n) {
        return Err(Error::NodeOutOfRange { index, num_nodes: n });
    }
    let remain = deleted.complement(n);
    if remain.is_empty() {
        return Err(Error::EmptyRemaining(
            "every node was deleted; the projection target is undefined".into(),
        ));
    }
    let mut diagnostics = Diagnostics {
        remaining_nodes: Some(remain.len()),
        ..Diagnostics::default()
    };
    let (g_remain, g_full) = remaining_gram(x, deleted, &remain, gram, &mut diagnostics)?;
    let eps = ridge_eps.unwrap_or_else(|| default_ridge(&g_remain));
    diagnostics.ridge_eps = Some(eps);
    let full_projector = SpanProjector::from_state(&g_full, Some(default_ridge(&g_full)))?;

    let blocks = model.dim() / d;
    let mut pre_span: f64 = 0.0;
    let mut residual: f64 = 0.0;
    let mut out = model.data().to_vec();
    let mut alphas = Vec::new();

    if deleted.is_empty() {
        for c in 0..model.rows() {
            for b in 0..blocks {
                let w = &model.row(c)[b * d..(b + 1) * d];
                let wn = norm(w);
                if wn > 0.0 {
                    pre_span = pre_span.max(full_projector.residual(w) / wn);
                }
            }
        }
    } else {
        let x_remain = x.select(&remain)?;
        let projector = SpanProjector::from_state(&g_remain, Some(eps))?;
        for c in 0..model.rows() {
            for b in 0..blocks {
                let range = c * model.dim() + b * d..c * model.dim() + (b + 1) * d;
                let w = &model.data()[range.clone()];
                let wn = norm(w);
                if wn > 0.0 {
                    pre_span = pre_span.max(full_projector.residual(w) / wn);
                }
                let (wp, z) = projector.project_with_coefficients(w);
                residual = residual.max(norm(&x_remain.matvec(&sub(w, &wp))));
                if keep_alpha {
                    alphas.push(x_remain.matvec(&z));
                }
                out[range].copy_from_slice(&wp);
            }
        }
    }
    if pre_span > SPAN_WARN_TOLERANCE {
        log::warn!(
            "weights are not in the span of the training features (relative residual {pre_span:.3e}); projection is not an exact unlearning certificate"
        );
    }
    let wn = model.norm();
    diagnostics.pre_span_residual = Some(pre_span);
    diagnostics.orthogonality_residual = Some(residual);
    diagnostics.relative_residual = Some(if wn > 0.0 { residual / wn } else { 0.0 });
    if keep_alpha {
        diagnostics.alpha = Some(alphas);
    }
    Ok((model.with_data(out)?, diagnostics))
}

/// Projection followed by `request.finetune_k` gradient steps on the
/// post-deletion objective.
pub fn projector_unlearn(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    request: &UnlearnRequest,
    gram: Option<&GramState>,
) -> Result<UnlearnResult> {
    let start = Instant::now();
    let (mut weights, mut diagnostics) = project_model(
        model,
        &data.features,
        &request.deleted,
        gram,
        request.ridge_eps,
        request.keep_alpha,
    )?;
    if request.finetune_k > 0 {
        let (remaining, _) = data.delete(&request.deleted)?;
        if remaining.train.is_empty() {
            return Err(Error::EmptyRemaining("no training nodes left to fine-tune on".into()));
        }
        let h = remaining.inputs(prop)?;
        weights = finetune(&weights, &h, &remaining.labels, &remaining.train, request.finetune_k, None)?.0;
        diagnostics.finetune_steps = Some(request.finetune_k);
    }
    Ok(UnlearnResult {
        strategy: Strategy::Projector,
        weights,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_model::{LossKind, Provenance};
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = crate::seed::rng_from(seed);
        FeatureMatrix::new(n, d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn model(rows: usize, d: usize, seed: u64) -> ModelWeights {
        let w = random(rows, d, seed);
        ModelWeights::new(rows, d, w.into_data(), LossKind::OvrLogistic, Provenance::new(0.1)).unwrap()
    }

    #[test]
    fn empty_deletion_is_identity() {
        let x = random(12, 4, 1);
        let m = model(2, 4, 2);
        let (w, diag) = project_model(&m, &x, &NodeSet::empty(), None, None, false).unwrap();
        assert_eq!(w.data(), m.data());
        assert_eq!(diag.orthogonality_residual, Some(0.0));
    }

    #[test]
    fn orthogonal_deleted_direction_removed() {
        // remaining rows live in the first two coordinates, the deleted one
        // on the third; w along the deleted row projects to zero
        let x = FeatureMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ])
        .unwrap();
        let m = ModelWeights::new(1, 3, vec![0.0, 0.0, 5.0], LossKind::Logistic, Provenance::new(0.1)).unwrap();
        let (w, _) = project_model(&m, &x, &NodeSet::new(vec![3]), None, None, false).unwrap();
        assert_eq!(w.data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn options_agree() {
        let x = random(40, 6, 7);
        let m = model(3, 6, 8);
        let del = NodeSet::new(vec![1, 5, 9, 33]);
        let full = gram_precompute(&x).with_inverse(None).unwrap();
        let (a, da) = project_model(&m, &x, &del, None, None, true).unwrap();
        let (b, db) = project_model(&m, &x, &del, Some(&full), None, true).unwrap();
        assert_eq!(da.gram_path.as_deref(), Some("direct"));
        assert_eq!(db.gram_path.as_deref(), Some("woodbury"));
        let rel = a.distance(&b) / a.norm();
        assert!(rel < 1e-8, "{rel}");
        let alpha = da.alpha.unwrap();
        assert_eq!(alpha.len(), 3);
        assert_eq!(alpha[0].len(), 36);
    }

    #[test]
    fn blockwise_projection_and_alpha_reconstruction() {
        let x = random(8, 3, 11);
        let m = model(2, 6, 12);
        let del = NodeSet::new(vec![0, 4]);
        let (w, diag) = project_model(&m, &x, &del, None, None, true).unwrap();
        let remain = del.complement(8);
        let xr = x.select(&remain).unwrap();
        let alphas = diag.alpha.unwrap();
        for c in 0..2 {
            for b in 0..2 {
                let rebuilt = xr.tr_matvec(&alphas[c * 2 + b]);
                let got = &w.row(c)[b * 3..(b + 1) * 3];
                for (g, r) in got.iter().zip(&rebuilt) {
                    assert!((g - r).abs() < 1e-10 * (1.0 + r.abs()));
                }
            }
        }
        assert!(diag.relative_residual.unwrap() < 1e-8);
    }

    #[test]
    fn errors() {
        let x = random(3, 2, 1);
        let m = model(1, 2, 2);
        assert!(matches!(
            project_model(&m, &x, &NodeSet::full(3), None, None, false),
            Err(Error::EmptyRemaining(_))
        ));
        let bad = model(1, 3, 2);
        assert!(project_model(&bad, &x, &NodeSet::empty(), None, None, false).is_err());
        let wrong_gram = gram_precompute(&random(4, 2, 3));
        assert!(project_model(&m, &x, &NodeSet::new(vec![0]), Some(&wrong_gram), None, false).is_err());
    }

    #[test]
    fn singular_capacitance_falls_back() {
        // the deleted row is the only one with a third coordinate
        let x = FeatureMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let full = gram_precompute(&x).with_inverse(Some(1e-12)).unwrap();
        let m = ModelWeights::new(1, 3, vec![1.0, 2.0, 3.0], LossKind::Logistic, Provenance::new(0.1)).unwrap();
        let (w, diag) = project_model(&m, &x, &NodeSet::new(vec![2]), Some(&full), None, false).unwrap();
        assert!(diag.fallback.is_some());
        assert_eq!(w.data()[2], 0.0);
        assert!((w.data()[0] - 1.0).abs() < 1e-12 && (w.data()[1] - 2.0).abs() < 1e-12);
    }
}
