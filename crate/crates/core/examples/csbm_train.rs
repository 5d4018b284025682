//! Sample a contextual stochastic block model, propagate features and train
//! a linear GNN.

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::graph::{generate_csbm, CsbmParams};
use graph_unlearn::linear_model::{evaluate, LossKind, TrainConfig};
use graph_unlearn::unlearn::fit_model;

fn main() -> graph_unlearn::Result<()> {
    let (graph, x, labels) = generate_csbm(&CsbmParams::symmetric(1000, 0.01, 0.002, 16, 2.0, 7))?;
    println!("{} nodes, {} edges", graph.num_nodes(), graph.num_edges());
    let data = GnnData::random_split(graph, x, labels, 0.7, 7)?;

    for hops in [0, 1, 2] {
        let prop = PropagationConfig::new(hops);
        let config = TrainConfig { lambda: 1e-3, eta: 1.0, epochs: 200, batch_size: None, seed: 0 };
        let (model, trace) = fit_model(&data, &prop, LossKind::Logistic, &config)?;
        let h = data.inputs(&prop)?;
        let acc = evaluate(&model, &h, &data.labels, &data.test).accuracy;
        println!(
            "hops {hops}: objective {:.4}, test accuracy {acc:.3}",
            trace.final_objective().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
