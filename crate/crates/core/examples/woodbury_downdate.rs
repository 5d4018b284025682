//! Precompute the Gram matrix once, then serve deletion requests by a
//! low-rank downdate instead of rebuilding it.

use graph_unlearn::features::{gram_downdate, gram_precompute, DowndateStrategy, FeatureMatrix, GramState};
use graph_unlearn::graph::NodeSet;
use graph_unlearn::linear_model::{LossKind, ModelWeights, Provenance};
use graph_unlearn::unlearn::project_model;
use rand::{Rng, SeedableRng};

fn main() -> graph_unlearn::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let (n, d) = (500, 40);
    let x = FeatureMatrix::new(n, d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect())?;

    // one-time cost: XᵀX plus a cached ridge inverse
    let full = gram_precompute(&x).with_inverse(None)?;

    let deleted = NodeSet::new((0..n).step_by(25).collect());
    let down = gram_downdate(&full, &x.select(&deleted)?, DowndateStrategy::Woodbury)?;
    let kept: Vec<usize> = deleted.complement(n).into_vec();
    let rebuilt = GramState::of_rows(&x, &kept)?;
    println!(
        "downdate path {:?}, max entry gap vs rebuild {:.2e}",
        down.strategy_used,
        (&down.state.gram - &rebuilt.gram).amax()
    );

    // the projector accepts the precomputed state directly
    let w = ModelWeights::new(1, d, (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(), LossKind::Logistic, Provenance::new(1e-2))?;
    let (fast, diag) = project_model(&w, &x, &deleted, Some(&full), None, false)?;
    let (direct, _) = project_model(&w, &x, &deleted, None, None, false)?;
    println!("gram path {:?}, gap to direct projection {:.2e}", diag.gram_path, fast.distance(&direct));
    Ok(())
}
