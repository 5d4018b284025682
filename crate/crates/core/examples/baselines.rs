//! Run every unlearning method on the same deletion and report distance to
//! retraining and wall-clock time.

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::eval::sample_fraction;
use graph_unlearn::graph::{generate_csbm, CsbmParams};
use graph_unlearn::linear_model::{LossKind, TrainConfig};
use graph_unlearn::unlearn::{fit_model, unlearn, Strategy, UnlearnRequest};

fn main() -> graph_unlearn::Result<()> {
    let (graph, x, labels) = generate_csbm(&CsbmParams::symmetric(1000, 0.01, 0.002, 16, 2.0, 11))?;
    let data = GnnData::random_split(graph, x, labels, 0.7, 11)?;
    let prop = PropagationConfig::new(2);
    let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &TrainConfig { lambda: 1e-4, eta: 1.0, epochs: 200, batch_size: None, seed: 11 })?;
    let deleted = sample_fraction(&data.train, 0.01, 11)?;

    let retrained = unlearn(&model, &data, &prop, &UnlearnRequest::new(deleted.clone(), Strategy::Retrain), None)?;
    println!("{:<16} {:>12} {:>10}", "method", "‖w_u − w_p‖", "seconds");
    for strategy in Strategy::ALL {
        let request = UnlearnRequest { noise_std: 0.0, seed: 11, ..UnlearnRequest::new(deleted.clone(), strategy) };
        let out = unlearn(&model, &data, &prop, &request, None)?;
        println!("{:<16} {:>12.4e} {:>10.4}", strategy.to_string(), out.weights.distance(&retrained.weights), out.elapsed_seconds);
    }
    Ok(())
}
