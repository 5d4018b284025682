//! Sweep deletion ratios and seeds, writing one CSV row per run.

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::eval::{median_weight_diff, robustness_sweep, write_sweep_csv, SweepConfig};
use graph_unlearn::graph::{generate_csbm, CsbmParams};
use graph_unlearn::linear_model::{LossKind, TrainConfig};
use graph_unlearn::unlearn::{fit_model, Strategy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, x, labels) = generate_csbm(&CsbmParams::symmetric(600, 0.02, 0.004, 12, 2.0, 9))?;
    let data = GnnData::random_split(graph, x, labels, 0.7, 9)?;
    let prop = PropagationConfig::new(2);
    let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &TrainConfig { lambda: 1e-3, eta: 1.0, epochs: 150, batch_size: None, seed: 9 })?;

    let config = SweepConfig {
        ratios: vec![0.01, 0.05, 0.1, 0.2],
        seeds: (0..4).collect(),
        strategies: vec![Strategy::Projector, Strategy::InfluencePlus, Strategy::FisherPlus],
        noise_std: 0.0,
        finetune_k: 0,
        ridge_eps: None,
        jobs: 0,
    };
    let rows = robustness_sweep(&model, &data, &prop, &config)?;
    for &ratio in &config.ratios {
        let medians: Vec<String> = config
            .strategies
            .iter()
            .map(|&s| format!("{s} {:.3e}", median_weight_diff(&rows, s, ratio)))
            .collect();
        println!("ratio {ratio:<5} {}", medians.join("  "));
    }
    println!();
    write_sweep_csv(&rows[..3], &mut std::io::stdout())?;
    Ok(())
}
