use std::time::Instant;

use super::{Diagnostics, Strategy, UnlearnResult};
use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::linear_model::{
    pegasos_train, train, LossKind, ModelWeights, PegasosConfig, Provenance, TrainConfig,
    TrainTrace,
};

/// Trains a fresh model from zero on `data.train`. Hinge models use the
/// Pegasos solver with `config.epochs` iterations; everything else uses
/// gradient descent.
pub fn fit_model(
    data: &GnnData,
    prop: &PropagationConfig,
    loss: LossKind,
    config: &TrainConfig,
) -> Result<(ModelWeights, TrainTrace)> {
    let h = data.inputs(prop)?;
    let (mut model, trace) = if loss == LossKind::Hinge {
        let start = Instant::now();
        let pegasos = PegasosConfig {
            lambda: config.lambda,
            iterations: config.epochs,
            batch_size: config.batch_size,
            seed: config.seed,
        };
        let mut model = pegasos_train(&h, &data.labels, &data.train, &pegasos)?;
        model.provenance.eta = config.eta;
        let trace = TrainTrace {
            steps: config.epochs,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            ..TrainTrace::default()
        };
        (model, trace)
    } else {
        let init = ModelWeights::zeros_for(loss, &data.labels, h.dim(), Provenance::new(config.lambda))?;
        train(&init, &h, &data.labels, &data.train, config)?
    };
    let extra = &mut model.provenance.extra;
    extra.insert("hops".into(), prop.hops.to_string());
    extra.insert("mode".into(), format!("{:?}", prop.mode));
    extra.insert("self_loops".into(), prop.self_loops.to_string());
    extra.insert("multi_hop".into(), prop.multi_hop.to_string());
    Ok((model, trace))
}

/// Training settings recorded in a model's provenance.
pub fn train_config_of(model: &ModelWeights) -> TrainConfig {
    let p = &model.provenance;
    TrainConfig {
        lambda: p.lambda,
        eta: p.eta,
        epochs: p.epochs,
        batch_size: p.batch_size,
        seed: p.seed,
    }
}

/// Deletes the nodes, rebuilds the propagation and retrains from zero with
/// the settings and seed recorded in `model`.
pub fn retrain_baseline(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    deleted: &NodeSet,
) -> Result<UnlearnResult> {
    if model.provenance.init_kind != "zero" {
        return Err(Error::InvalidInput(format!(
            "cannot retrain a model with init `{}`; only zero init is reproducible",
            model.provenance.init_kind
        )));
    }
    let start = Instant::now();
    let (remaining, _) = data.delete(deleted)?;
    if remaining.train.is_empty() {
        return Err(Error::EmptyRemaining("no training nodes remain".into()));
    }
    let (weights, _) = fit_model(&remaining, prop, model.loss, &train_config_of(model))?;
    Ok(UnlearnResult {
        strategy: Strategy::Retrain,
        weights,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        diagnostics: Diagnostics {
            remaining_nodes: Some(remaining.train.len()),
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureMatrix;
    use crate::graph::Graph;
    use crate::linear_model::{loss_and_grad, predict, Labels};

    fn config() -> TrainConfig {
        TrainConfig {
            lambda: 0.1,
            eta: 0.5,
            epochs: 200,
            batch_size: None,
            seed: 3,
        }
    }

    #[test]
    fn retrain_is_deterministic() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (2, 3)]).unwrap();
        let x = FeatureMatrix::new(6, 2, vec![1.0, 0.2, 0.9, 0.1, 0.8, 0.0, -0.7, 0.1, -1.0, 0.3, -0.9, 0.2]).unwrap();
        let y = Labels::binary(vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0]).unwrap();
        let data = GnnData::new(g, x, y, NodeSet::full(6), NodeSet::empty()).unwrap();
        let prop = PropagationConfig::new(1);
        let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config()).unwrap();
        let del = NodeSet::new(vec![5]);
        let a = retrain_baseline(&model, &data, &prop, &del).unwrap();
        let b = retrain_baseline(&model, &data, &prop, &del).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn triangle_retrain_improves_post_deletion_objective() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let x = FeatureMatrix::new(3, 2, vec![1.0, 0.5, -0.3, 1.0, 0.7, -0.8]).unwrap();
        let y = Labels::binary(vec![1.0, -1.0, 1.0]).unwrap();
        let data = GnnData::new(g, x, y, NodeSet::full(3), NodeSet::empty()).unwrap();
        let prop = PropagationConfig::new(1);
        let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config()).unwrap();
        let del = NodeSet::new(vec![2]);
        let retrained = retrain_baseline(&model, &data, &prop, &del).unwrap().weights;
        let (remaining, _) = data.delete(&del).unwrap();
        let h = remaining.inputs(&prop).unwrap();
        let f = |w: &ModelWeights| loss_and_grad(w, &h, &remaining.labels, &remaining.train, 0.1).unwrap().objective;
        assert!(f(&retrained) <= f(&model));
    }

    #[test]
    fn isolated_node_deletion_keeps_decisions() {
        // two mirrored components plus an isolated node at the origin
        let g = Graph::from_edges(5, &[(0, 1), (2, 3)]).unwrap();
        let x = FeatureMatrix::new(5, 1, vec![1.0, 1.0, -1.0, -1.0, 0.0]).unwrap();
        let y = Labels::binary(vec![1.0, 1.0, -1.0, -1.0, 1.0]).unwrap();
        let data = GnnData::new(g, x, y, NodeSet::full(5), NodeSet::empty()).unwrap();
        let prop = PropagationConfig::new(1);
        let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config()).unwrap();
        let retrained = retrain_baseline(&model, &data, &prop, &NodeSet::new(vec![4])).unwrap().weights;
        let h = data.inputs(&prop).unwrap();
        let nodes = NodeSet::new(vec![0, 1, 2, 3]);
        assert_eq!(predict(&model, &h, &nodes).0, predict(&retrained, &h, &nodes).0);
    }

    #[test]
    fn hinge_uses_pegasos() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let x = FeatureMatrix::new(4, 1, vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let y = Labels::binary(vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let data = GnnData::new(g, x, y, NodeSet::full(4), NodeSet::empty()).unwrap();
        let (model, trace) = fit_model(&data, &PropagationConfig::new(1), LossKind::Hinge, &config()).unwrap();
        assert_eq!(model.provenance.extra.get("solver").map(String::as_str), Some("pegasos"));
        assert_eq!(trace.steps, 200);
        assert!(model.row(0)[0] > 0.0);
    }
}
