//! Replace raw features with the hidden layer of a small MLP trained on the
//! remaining nodes, then project within that learned feature space.

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::eval::{mlp_feature_mode, sample_fraction, MlpConfig};
use graph_unlearn::graph::{generate_csbm, CsbmParams};
use graph_unlearn::linear_model::{LossKind, TrainConfig};
use graph_unlearn::unlearn::{fit_model, unlearn, Strategy, UnlearnRequest};

fn main() -> graph_unlearn::Result<()> {
    let (graph, x, labels) = generate_csbm(&CsbmParams::symmetric(400, 0.03, 0.005, 8, 2.0, 2))?;
    let data = GnnData::random_split(graph, x, labels, 0.7, 2)?;
    let deleted = sample_fraction(&data.train, 0.05, 2)?;
    let remain = deleted.complement(data.num_nodes());

    let mlp = mlp_feature_mode(&data, &remain, &MlpConfig { hidden: 16, epochs: 50, ..MlpConfig::default() })?;
    println!("MLP final loss {:.4}; {}", mlp.metadata.final_loss, mlp.metadata.caveat);

    let learned = data.with_features(mlp.features)?;
    let prop = PropagationConfig::new(2);
    let (model, _) = fit_model(&learned, &prop, LossKind::Logistic, &TrainConfig { lambda: 1e-2, eta: 0.5, epochs: 100, batch_size: None, seed: 2 })?;
    let result = unlearn(&model, &learned, &prop, &UnlearnRequest::new(deleted, Strategy::Projector), None)?;
    println!("relative residual after projection {:.2e}", result.diagnostics.relative_residual.unwrap_or(f64::NAN));
    Ok(())
}
