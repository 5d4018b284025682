use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{gaussian_noise, Diagnostics, InfluenceMode, Strategy, UnlearnRequest, UnlearnResult};
use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::graph::affected_set;
use crate::linear_model::{hessian, loss_and_grad, LossKind, ModelWeights};
use crate::seed::{derive_seed, Stream};

fn require_logistic(model: &ModelWeights, operation: &str) -> Result<()> {
    match model.loss {
        LossKind::Logistic | LossKind::OvrLogistic => Ok(()),
        other => Err(Error::Unsupported {
            operation: operation.into(),
            loss: other.name().into(),
        }),
    }
}

fn solve_spd(h: &DMatrix<f64>, g: &[f64]) -> Result<DVector<f64>> {
    let chol = nalgebra::Cholesky::new(h.clone())
        .ok_or_else(|| Error::Factorization("Hessian is not positive definite".into()))?;
    Ok(chol.solve(&DVector::from_column_slice(g)))
}

/// `H^{-1/4}` through a symmetric eigendecomposition, with eigenvalues
/// clamped below at `floor` first.
pub fn inverse_quarter_power(h: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix", h.nrows(), h.ncols())));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("non-finite Hessian entry".into()));
    }
    let eig = SymmetricEigen::new(h.clone());
    let scaled = eig
        .eigenvalues
        .map(|mu| mu.max(floor).max(f64::MIN_POSITIVE).powf(-0.25));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&scaled) * v.transpose())
}

fn add_noise(weights: &mut ModelWeights, request: &UnlearnRequest, diagnostics: &mut Diagnostics) -> Result<()> {
    if request.noise_std > 0.0 {
        let seed = derive_seed(request.seed, Stream::Noise);
        let noise = gaussian_noise(seed, request.noise_std, weights.data().len());
        let data: Vec<f64> = weights.data().iter().zip(&noise).map(|(w, b)| w + b).collect();
        *weights = weights.with_data(data)?;
        diagnostics.noise_draw_seed = Some(seed);
    }
    Ok(())
}

/// Newton step on the post-deletion objective, optionally followed by the
/// noise term `H^{-1/4} b` with `b ~ N(0, noise_std² I)` drawn per row.
/// An empty deletion has nothing to forget and skips the step, so only the
/// noise applies.
pub fn newton_on_remaining(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    request: &UnlearnRequest,
) -> Result<(ModelWeights, Diagnostics)> {
    require_logistic(model, "newton step")?;
    let (remaining, _) = data.delete(&request.deleted)?;
    if remaining.train.is_empty() {
        return Err(Error::EmptyRemaining("no training nodes remain".into()));
    }
    let lambda = model.lambda();
    let h = remaining.inputs(prop)?;
    let grad = loss_and_grad(model, &h, &remaining.labels, &remaining.train, lambda)?.gradient;
    let hess = hessian(model, &h, &remaining.labels, &remaining.train, lambda)?;
    let d = model.dim();
    let mut diagnostics = Diagnostics {
        remaining_nodes: Some(remaining.train.len()),
        ..Diagnostics::default()
    };
    let noise_seed = derive_seed(request.seed, Stream::Noise);
    let noise = (request.noise_std > 0.0)
        .then(|| gaussian_noise(noise_seed, request.noise_std, model.data().len()));
    let floor = if lambda > 0.0 { lambda / 2.0 } else { 1e-12 };
    let mut out = model.data().to_vec();
    for (c, hc) in hess.iter().enumerate() {
        let row = &mut out[c * d..(c + 1) * d];
        if !request.deleted.is_empty() {
            let step = solve_spd(hc, &grad[c * d..(c + 1) * d])?;
            for (w, s) in row.iter_mut().zip(step.iter()) {
                *w -= s;
            }
        }
        if let Some(noise) = &noise {
            let b = DVector::from_column_slice(&noise[c * d..(c + 1) * d]);
            let shaped = inverse_quarter_power(hc, floor)? * b;
            for (w, s) in row.iter_mut().zip(shaped.iter()) {
                *w += s;
            }
        }
    }
    if noise.is_some() {
        diagnostics.noise_draw_seed = Some(noise_seed);
    }
    Ok((model.with_data(out)?, diagnostics))
}

/// Influence-style removal. Let `A` be the nodes within `hops` of a deleted
/// node and `R` the training nodes outside `A`. On the pre-deletion inputs,
/// the step `w + (|A∩T|/|R|) H_R⁻¹ ∇F_{A∩T}(w)` is a Newton step on `F_R`
/// from the stationarity of `F_T`; each weight row is updated independently.
/// [`InfluenceMode::Corrected`] instead takes the full Newton step on the
/// post-deletion objective.
pub fn influence_plus(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    request: &UnlearnRequest,
) -> Result<UnlearnResult> {
    require_logistic(model, "influence_plus")?;
    let start = Instant::now();
    let affected = if prop.hops == 0 {
        request.deleted.clone()
    } else {
        affected_set(&data.graph, &request.deleted, prop.hops)?
    };
    let (mut weights, mut diagnostics) = match request.influence_mode {
        InfluenceMode::Corrected => {
            let quiet = UnlearnRequest {
                noise_std: 0.0,
                ..request.clone()
            };
            newton_on_remaining(model, data, prop, &quiet)?
        }
        InfluenceMode::Plain => {
            let removed = affected.intersection(&data.train);
            let rest = data.train.difference(&affected);
            let diagnostics = Diagnostics {
                remaining_nodes: Some(rest.len()),
                ..Diagnostics::default()
            };
            if removed.is_empty() {
                (model.clone(), diagnostics)
            } else {
                if rest.is_empty() {
                    return Err(Error::EmptyRemaining(
                        "every training node is affected by the deletion".into(),
                    ));
                }
                let lambda = model.lambda();
                let h = data.inputs(prop)?;
                let grad = loss_and_grad(model, &h, &data.labels, &removed, lambda)?.gradient;
                let hess = hessian(model, &h, &data.labels, &rest, lambda)?;
                let scale = removed.len() as f64 / rest.len() as f64;
                let d = model.dim();
                let mut out = model.data().to_vec();
                for (c, hc) in hess.iter().enumerate() {
                    let step = solve_spd(hc, &grad[c * d..(c + 1) * d])?;
                    for (w, s) in out[c * d..(c + 1) * d].iter_mut().zip(step.iter()) {
                        *w += scale * s;
                    }
                }
                (model.with_data(out)?, diagnostics)
            }
        }
    };
    add_noise(&mut weights, request, &mut diagnostics)?;
    diagnostics.affected_set_size = Some(affected.len());
    Ok(UnlearnResult {
        strategy: Strategy::InfluencePlus,
        weights,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// One Newton step on the remaining training nodes of the post-deletion
/// graph plus `H^{-1/4} b` noise.
pub fn fisher_plus(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    request: &UnlearnRequest,
) -> Result<UnlearnResult> {
    let start = Instant::now();
    let (weights, diagnostics) = newton_on_remaining(model, data, prop, request)?;
    Ok(UnlearnResult {
        strategy: Strategy::FisherPlus,
        weights,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}
