//! Invariants checked over generated inputs.

mod common;

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::eval::{closeness_report, sample_fraction};
use graph_unlearn::features::{
    gram_downdate, gram_precompute, project_onto_span, DowndateStrategy, FeatureMatrix, GramState,
};
use graph_unlearn::graph::{generate_csbm, CsbmParams, NodeSet};
use graph_unlearn::linear_model::{LossKind, ModelWeights, Provenance, TrainConfig};
use graph_unlearn::unlearn::{fit_model, project_model, unlearn, Strategy as Method, UnlearnRequest};
use proptest::prelude::*;

use common::dense_span_residual;

fn matrix() -> impl Strategy<Value = FeatureMatrix> {
    (1usize..30, 1usize..10).prop_flat_map(|(n, d)| {
        proptest::collection::vec(-2.0f64..2.0, n * d).prop_map(move |v| FeatureMatrix::new(n, d, v).unwrap())
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn trained(seed: u64) -> (ModelWeights, GnnData, PropagationConfig) {
    let (g, x, y) = generate_csbm(&CsbmParams::symmetric(80, 0.1, 0.02, 5, 2.0, seed)).unwrap();
    let data = GnnData::random_split(g, x, y, 0.7, seed).unwrap();
    let prop = PropagationConfig::new(2);
    let config = TrainConfig {
        lambda: 1e-2,
        eta: 0.5,
        epochs: 60,
        batch_size: None,
        seed,
    };
    let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config).unwrap();
    (model, data, prop)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_in_span_and_shrinks(x in matrix(), seed in any::<u64>()) {
        let d = x.dim();
        let w: Vec<f64> = (0..d).map(|j| ((seed >> (j % 60)) & 7) as f64 - 3.5).collect();
        let all: Vec<usize> = (0..x.rows()).collect();
        let gram = GramState::of_rows(&x, &all).unwrap();
        let p = project_onto_span(&w, &x, &gram, None).unwrap();
        let scale = norm(&w).max(1.0);
        prop_assert!(dense_span_residual(&p.w_projected, &x) <= 1e-8 * scale);
        prop_assert!(norm(&p.w_projected) <= norm(&w) * (1.0 + 1e-9) + 1e-12);
        let again = project_onto_span(&p.w_projected, &x, &gram, None).unwrap();
        let gap: Vec<f64> = again.w_projected.iter().zip(&p.w_projected).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&gap) <= 1e-9 * scale);
    }

    #[test]
    fn downdate_matches_gram_of_remaining_rows(x in matrix(), pick in proptest::collection::vec(any::<bool>(), 30)) {
        let n = x.rows();
        let deleted: Vec<usize> = (0..n).filter(|&i| pick[i]).collect();
        let kept: Vec<usize> = (0..n).filter(|&i| !pick[i]).collect();
        let x_del = x.select_rows(&deleted).unwrap();
        let full = gram_precompute(&x);
        let expected = GramState::of_rows(&x, &kept).unwrap();
        for strategy in [DowndateStrategy::Direct, DowndateStrategy::Woodbury] {
            let got = gram_downdate(&full, &x_del, strategy).unwrap().state;
            let scale = full.gram.norm().max(1.0);
            prop_assert!((&got.gram - &expected.gram).norm() <= 1e-12 * scale);
            prop_assert_eq!(got.source_rows, kept.len());
        }
    }

    #[test]
    fn deletion_order_is_irrelevant(x in matrix(), mut picks in proptest::collection::vec(0usize..30, 1..6)) {
        let n = x.rows();
        picks.retain(|&i| i < n);
        prop_assume!(!picks.is_empty() && picks.len() < n);
        let w = ModelWeights::new(1, x.dim(), vec![1.0; x.dim()], LossKind::Logistic, Provenance::new(0.1)).unwrap();
        let forward = NodeSet::new(picks.clone());
        picks.reverse();
        let backward = NodeSet::new(picks);
        let (a, _) = project_model(&w, &x, &forward, None, None, false).unwrap();
        let (b, _) = project_model(&w, &x, &backward, None, None, false).unwrap();
        prop_assert_eq!(a.data(), b.data());
    }

    #[test]
    fn closeness_is_invariant_to_subset_order(seed in 0u64..1000, cut in 1usize..20) {
        let (model, data, prop) = trained(seed % 5);
        let h = data.inputs(&prop).unwrap();
        let w_u = model.with_data(model.data().iter().map(|v| v * 0.9).collect()).unwrap();
        let ids: Vec<usize> = data.train.iter().take(cut).collect();
        let mut rev = ids.clone();
        rev.reverse();
        let w_p = model.with_data(model.data().iter().map(|v| v + 0.01 * (seed as f64 % 3.0)).collect()).unwrap();
        let a = closeness_report(&model, &w_p, &w_u, &h, &[("s".into(), NodeSet::new(ids))]).unwrap();
        let b = closeness_report(&model, &w_p, &w_u, &h, &[("s".into(), NodeSet::new(rev))]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn deletion_fractions_are_nested(seed in any::<u64>(), a in 0.01f64..0.5, b in 0.01f64..0.5) {
        let pool = NodeSet::new((0..200).step_by(3).collect());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = sample_fraction(&pool, lo, seed).unwrap();
        let large = sample_fraction(&pool, hi, seed).unwrap();
        prop_assert!(small.is_subset(&large));
        prop_assert!(small.is_subset(&pool));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn empty_deletion_changes_nothing(seed in 0u64..50) {
        let (model, data, prop) = trained(seed);
        for strategy in [Method::Projector, Method::InfluencePlus, Method::FisherPlus] {
            let request = UnlearnRequest::new(NodeSet::empty(), strategy);
            let out = unlearn(&model, &data, &prop, &request, None).unwrap().weights;
            prop_assert!(out.distance(&model) <= 1e-9 * norm(model.data()).max(1.0), "{strategy:?}");
        }
    }
}
