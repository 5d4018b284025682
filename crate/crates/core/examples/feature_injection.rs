//! Plant a feature channel on the nodes to be deleted, train on it, then
//! measure how much weight each unlearning method leaves on that channel.

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::eval::{feature_injection_experiment, InjectionConfig};
use graph_unlearn::graph::{generate_csbm, CsbmParams};
use graph_unlearn::linear_model::TrainConfig;

fn main() -> graph_unlearn::Result<()> {
    let (graph, x, labels) = generate_csbm(&CsbmParams::symmetric(1000, 0.01, 0.002, 16, 2.0, 3))?;
    let data = GnnData::random_split(graph, x, labels, 0.7, 3)?;
    let prop = PropagationConfig::new(2);
    let config = InjectionConfig::new(TrainConfig { lambda: 1e-3, eta: 1.0, epochs: 150, batch_size: None, seed: 3 });
    let report = feature_injection_experiment(&data, &prop, &config)?;

    println!("deleted {} nodes; channel weight before unlearning {:.4}", report.deleted_count, report.injected_channel_norm_before);
    for o in &report.outcomes {
        println!("{:<16} channel weight {:.3e}   accuracy {:.3}", o.strategy.to_string(), o.injected_channel_norm_after, o.accuracy_after);
    }
    println!("{:<16} accuracy {:.3}", "retrain", report.retrain_accuracy);
    Ok(())
}
