//! Experiment harness: feature injection, closeness to retraining,
//! robustness sweeps and MLP feature extraction.

mod closeness;
mod injection;
mod mlp;
mod sweep;

use rand::seq::SliceRandom;

pub use closeness::{activations, closeness_report, compare_to_retrain, ClosenessReport};
pub use injection::{
    feature_injection_experiment, inject_channel, InjectionConfig, InjectionLabels, InjectionReport,
    StrategyOutcome,
};
pub use mlp::{mlp_feature_mode, Activation, Mlp, MlpConfig, MlpFeatures, MlpMetadata};
pub use sweep::{median_weight_diff, robustness_sweep, write_sweep_csv, SweepConfig, SweepRow};

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::seed::{derive_seed, rng_from, Stream};

/// `round(fraction · |pool|)` nodes of `pool` (at least one), taken as a
/// prefix of one seeded permutation so that sets drawn with the same seed
/// are nested as the fraction grows.
pub fn sample_fraction(pool: &NodeSet, fraction: f64, seed: u64) -> Result<NodeSet> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config("fraction", format!("{fraction} is not in (0, 1)")));
    }
    if pool.is_empty() {
        return Err(Error::EmptyRemaining("no nodes to sample deletions from".into()));
    }
    let count = ((pool.len() as f64 * fraction).round() as usize).clamp(1, pool.len());
    let mut order = pool.as_slice().to_vec();
    order.shuffle(&mut rng_from(derive_seed(seed, Stream::Deletion)));
    order.truncate(count);
    Ok(NodeSet::new(order))
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}
