use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compare_to_retrain, sample_fraction};
use crate::dataset::{GnnData, PropagationConfig};
use crate::error::{Error, Result};
use crate::linear_model::{evaluate, ModelWeights};
use crate::unlearn::{unlearn, Strategy, UnlearnRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Deletion fractions of the training set.
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub finetune_k: usize,
    #[serde(default)]
    pub ridge_eps: Option<f64>,
    /// Worker threads; 0 uses the global pool.
    #[serde(default)]
    pub jobs: usize,
}

/// One `(ratio, seed, strategy)` cell, compared against retraining on the
/// same deletion set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub seed: u64,
    pub strategy: Strategy,
    pub deleted_count: usize,
    pub normalized_weight_diff: f64,
    /// Mean activation distance on the deleted nodes, evaluated on the
    /// original graph.
    pub activation_deleted: f64,
    /// Mean activation distance on the remaining training nodes, on the
    /// post-deletion graph.
    pub activation_remaining: f64,
    /// Same on the test nodes; NaN when there are none.
    pub activation_test: f64,
    pub test_accuracy: f64,
    pub retrain_test_accuracy: f64,
    pub unlearn_seconds: f64,
    pub retrain_seconds: f64,
}

fn cell(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    config: &SweepConfig,
    ratio: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let deleted = sample_fraction(&data.train, ratio, seed)?;
    let request_for = |strategy| UnlearnRequest {
        noise_std: config.noise_std,
        finetune_k: config.finetune_k,
        ridge_eps: config.ridge_eps,
        seed,
        ..UnlearnRequest::new(deleted.clone(), strategy)
    };
    let retrained = unlearn(model, data, prop, &request_for(Strategy::Retrain), None)?;
    let (remaining, _) = data.delete(&deleted)?;
    let h_after = remaining.inputs(prop)?;
    let retrain_test_accuracy = evaluate(&retrained.weights, &h_after, &remaining.labels, &remaining.test).accuracy;

    config
        .strategies
        .iter()
        .map(|&strategy| {
            let result = unlearn(model, data, prop, &request_for(strategy), None)?;
            let report = compare_to_retrain(model, &result.weights, &retrained.weights, data, prop, &deleted)?;
            let get = |k: &str| report.activation_distance.get(k).copied().unwrap_or(f64::NAN);
            Ok(SweepRow {
                ratio,
                seed,
                strategy,
                deleted_count: deleted.len(),
                normalized_weight_diff: report.normalized_weight_diff,
                activation_deleted: get("deleted"),
                activation_remaining: get("remaining"),
                activation_test: get("test"),
                test_accuracy: evaluate(&result.weights, &h_after, &remaining.labels, &remaining.test).accuracy,
                retrain_test_accuracy,
                unlearn_seconds: result.elapsed_seconds,
                retrain_seconds: retrained.elapsed_seconds,
            })
        })
        .collect()
}

/// Every strategy at every `(ratio, seed)` against the trained `model`.
/// Deletion sets for one seed are nested across ratios. Rows come back in
/// ratio, seed, strategy order whatever the thread count.
pub fn robustness_sweep(
    model: &ModelWeights,
    data: &GnnData,
    prop: &PropagationConfig,
    config: &SweepConfig,
) -> Result<Vec<SweepRow>> {
    if config.ratios.is_empty() || config.seeds.is_empty() || config.strategies.is_empty() {
        return Err(Error::config("sweep", "ratios, seeds and strategies must be non-empty"));
    }
    let cells: Vec<(f64, u64)> = config
        .ratios
        .iter()
        .flat_map(|&r| config.seeds.iter().map(move |&s| (r, s)))
        .collect();
    let run = || -> Result<Vec<SweepRow>> {
        let nested: Vec<Vec<SweepRow>> = cells
            .par_iter()
            .map(|&(ratio, seed)| cell(model, data, prop, config, ratio, seed))
            .collect::<Result<_>>()?;
        Ok(nested.into_iter().flatten().collect())
    };
    if config.jobs == 0 {
        return run();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    pool.install(run)
}

/// Long-form CSV, one line per row.
pub fn write_sweep_csv(rows: &[SweepRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "ratio,seed,strategy,deleted_count,normalized_weight_diff,activation_deleted,activation_remaining,activation_test,test_accuracy,retrain_test_accuracy,unlearn_seconds,retrain_seconds"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.ratio,
            r.seed,
            r.strategy,
            r.deleted_count,
            r.normalized_weight_diff,
            r.activation_deleted,
            r.activation_remaining,
            r.activation_test,
            r.test_accuracy,
            r.retrain_test_accuracy,
            r.unlearn_seconds,
            r.retrain_seconds
        )?;
    }
    Ok(())
}

/// Median normalized weight distance of `strategy` at `ratio` across seeds;
/// NaN when no row matches.
pub fn median_weight_diff(rows: &[SweepRow], strategy: Strategy, ratio: f64) -> f64 {
    let mut values: Vec<f64> = rows
        .iter()
        .filter(|r| r.strategy == strategy && r.ratio == ratio)
        .map(|r| r.normalized_weight_diff)
        .collect();
    super::median(&mut values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_csbm, CsbmParams};
    use crate::linear_model::{LossKind, TrainConfig};
    use crate::unlearn::fit_model;

    fn setup() -> (ModelWeights, GnnData, PropagationConfig) {
        let (g, x, y) = generate_csbm(&CsbmParams::symmetric(150, 0.05, 0.01, 6, 2.0, 8)).unwrap();
        let data = GnnData::random_split(g, x, y, 0.7, 8).unwrap();
        let prop = PropagationConfig::new(2);
        let config = TrainConfig {
            lambda: 1e-2,
            eta: 0.5,
            epochs: 100,
            batch_size: None,
            seed: 0,
        };
        let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config).unwrap();
        (model, data, prop)
    }

    fn config(jobs: usize) -> SweepConfig {
        SweepConfig {
            ratios: vec![0.02, 0.1],
            seeds: vec![1, 2],
            strategies: vec![Strategy::Projector, Strategy::InfluencePlus],
            noise_std: 0.0,
            finetune_k: 0,
            ridge_eps: None,
            jobs,
        }
    }

    fn strip(rows: &[SweepRow]) -> Vec<SweepRow> {
        rows.iter()
            .cloned()
            .map(|mut r| {
                r.unlearn_seconds = 0.0;
                r.retrain_seconds = 0.0;
                r
            })
            .collect()
    }

    #[test]
    fn row_count_order_and_thread_independence() {
        let (model, data, prop) = setup();
        let one = robustness_sweep(&model, &data, &prop, &config(1)).unwrap();
        let four = robustness_sweep(&model, &data, &prop, &config(4)).unwrap();
        assert_eq!(one.len(), 2 * 2 * 2);
        assert_eq!(strip(&one), strip(&four));
        assert_eq!((one[0].ratio, one[0].seed, one[0].strategy), (0.02, 1, Strategy::Projector));
        assert_eq!((one[7].ratio, one[7].seed, one[7].strategy), (0.1, 2, Strategy::InfluencePlus));
        assert!(median_weight_diff(&one, Strategy::Projector, 0.1).is_finite());
        assert!(median_weight_diff(&one, Strategy::Retrain, 0.1).is_nan());
    }

    #[test]
    fn csv_has_header_and_one_line_per_row() {
        let (model, data, prop) = setup();
        let rows = robustness_sweep(&model, &data, &prop, &config(2)).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), rows.len() + 1);
        assert!(text.lines().nth(1).unwrap().starts_with("0.02,1,projector,"));
    }

    #[test]
    fn empty_axes_are_rejected() {
        let (model, data, prop) = setup();
        let mut c = config(1);
        c.seeds.clear();
        assert!(matches!(robustness_sweep(&model, &data, &prop, &c), Err(Error::Config { .. })));
    }
}
