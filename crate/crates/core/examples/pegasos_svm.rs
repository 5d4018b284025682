//! Train a linear SVM with Pegasos and unlearn with the projector, which
//! works for any loss because it only uses the feature span.

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::eval::sample_fraction;
use graph_unlearn::graph::{generate_csbm, CsbmParams};
use graph_unlearn::linear_model::{evaluate, pegasos_train, PegasosConfig};
use graph_unlearn::unlearn::{unlearn, Strategy, UnlearnRequest};

fn main() -> graph_unlearn::Result<()> {
    let (graph, x, labels) = generate_csbm(&CsbmParams::symmetric(500, 0.02, 0.004, 8, 2.0, 4))?;
    let data = GnnData::random_split(graph, x, labels, 0.7, 4)?;
    let prop = PropagationConfig::new(2);
    let h = data.inputs(&prop)?;
    let svm = pegasos_train(&h, &data.labels, &data.train, &PegasosConfig { lambda: 1e-3, iterations: 2000, batch_size: Some(16), seed: 4 })?;
    println!("SVM test accuracy {:.3}", evaluate(&svm, &h, &data.labels, &data.test).accuracy);

    let deleted = sample_fraction(&data.train, 0.1, 4)?;
    let result = unlearn(&svm, &data, &prop, &UnlearnRequest::new(deleted.clone(), Strategy::Projector), None)?;
    println!(
        "projected in {:.2e}s, relative residual {:.2e}",
        result.elapsed_seconds,
        result.diagnostics.relative_residual.unwrap_or(f64::NAN)
    );

    // the Newton baselines need a twice-differentiable loss
    let err = unlearn(&svm, &data, &prop, &UnlearnRequest::new(deleted, Strategy::InfluencePlus), None);
    println!("influence_plus on hinge: {}", err.err().map(|e| e.to_string()).unwrap_or_default());
    Ok(())
}
