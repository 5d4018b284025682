//! Acceptance gate: one PASS/FAIL line per criterion, run sequentially so
//! that wall-clock budgets are not distorted by other tests in this binary.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use graph_unlearn::dataset::{GnnData, PropagationConfig};
use graph_unlearn::eval::{
    feature_injection_experiment, median_weight_diff, robustness_sweep, InjectionConfig,
    SweepConfig,
};
use graph_unlearn::features::{
    delta_measure, gram_precompute, project_onto_span, span_residual, DeltaMode, FeatureMatrix,
    GramState,
};
use graph_unlearn::graph::{generate_csbm, CsbmParams, NodeSet};
use graph_unlearn::linear_model::{
    hessian, loss_and_grad, pegasos_train, train, Labels, LossKind, ModelWeights, PegasosConfig,
    Provenance, TrainConfig,
};
use graph_unlearn::unlearn::{
    estimate_constants, fit_model, observed_constants, project_model, prop2_condition,
    projector_unlearn, retrain_baseline, Strategy, UnlearnRequest,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use common::{dense_span_residual, random_graph, random_matrix, rng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if num == 0.0 {
        0.0
    } else {
        num / den.max(f64::MIN_POSITIVE)
    }
}

fn csbm_data(n: usize, p: f64, q: f64, dim: usize, seed: u64) -> GnnData {
    let (g, x, y) = generate_csbm(&CsbmParams::symmetric(n, p, q, dim, 2.0, seed)).unwrap();
    GnnData::random_split(g, x, y, 0.7, seed).unwrap()
}

/// Random rows in a random `rank`-dimensional subspace, so the remaining
/// span is often a proper subspace.
fn low_rank_matrix(n: usize, d: usize, rank: usize, r: &mut impl Rng) -> FeatureMatrix {
    let basis: Vec<Vec<f64>> = (0..rank).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let coef: Vec<f64> = (0..rank).map(|_| r.random_range(-1.0..1.0)).collect();
        data.extend((0..d).map(|j| (0..rank).map(|k| coef[k] * basis[k][j]).sum::<f64>()));
    }
    FeatureMatrix::new(n, d, data).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let (mut worst_orth, mut worst_idem) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let n = r.random_range(2..=100);
        let d = r.random_range(1..=32);
        let rank = r.random_range(1..=d);
        let x = if r.random_bool(0.5) { random_matrix(n, d, &mut r) } else { low_rank_matrix(n, d, rank, &mut r) };
        let keep: Vec<usize> = (0..n).filter(|_| r.random_bool(0.7)).collect();
        let keep = if keep.is_empty() { vec![0] } else { keep };
        let x_r = x.select_rows(&keep).unwrap();
        let gram = GramState::of_rows(&x, &keep).unwrap();
        let w: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let once = project_onto_span(&w, &x_r, &gram, None).unwrap();
        let twice = project_onto_span(&once.w_projected, &x_r, &gram, None).unwrap();
        let diff: Vec<f64> = w.iter().zip(&once.w_projected).map(|(a, b)| a - b).collect();
        let orth = x_r.matvec(&diff).iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_orth = worst_orth.max(orth / wn);
        worst_idem = worst_idem.max(rel_diff(&twice.w_projected, &once.w_projected));
    }
    let elapsed = start.elapsed();
    let pass = worst_orth <= 1e-8 && worst_idem <= 1e-9 && within_budget(elapsed, 10);
    outcome(
        pass,
        format!("orthogonality/‖w‖ {worst_orth:.2e}, idempotence {worst_idem:.2e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut r = rng(202);
    let mut worst = 0.0f64;
    let mut max_m = 0;
    let mut woodbury_used = 0;
    for i in 0..100 {
        let d = r.random_range(2..=24);
        let n = r.random_range(d + 1..=100);
        let x = random_matrix(n, d, &mut r);
        // cycle through deletion sizes up to d - 1
        let m = 1 + i % (d - 1);
        max_m = max_m.max(m);
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut r);
        let deleted = NodeSet::new(order[..m].to_vec());
        let w: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let model = ModelWeights::new(1, d, w, LossKind::Logistic, Provenance::new(0.1)).unwrap();
        let full = gram_precompute(&x).with_inverse(None).unwrap();
        let (direct, _) = project_model(&model, &x, &deleted, None, None, false).unwrap();
        let (down, diag) = project_model(&model, &x, &deleted, Some(&full), None, false).unwrap();
        if diag.gram_path.as_deref() == Some("woodbury") {
            woodbury_used += 1;
        }
        worst = worst.max(rel_diff(down.data(), direct.data()));
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-8 && within_budget(elapsed, 10);
    outcome(
        pass,
        format!(
            "max relative gap {worst:.2e}, deletions up to {max_m}, Woodbury path on {woodbury_used}/100, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let prop = PropagationConfig::new(2);
    let mut failures = Vec::new();
    let mut projector_max = 0.0f64;
    let mut before_min = f64::INFINITY;
    let mut influence_min = f64::INFINITY;
    let mut fisher_min = f64::INFINITY;
    for trial in 0..50u64 {
        let data = csbm_data(1000, 0.01, 0.002, 16, trial);
        let mut config = InjectionConfig::new(TrainConfig {
            lambda: 1e-3,
            eta: 1.0,
            epochs: 100,
            batch_size: None,
            seed: trial,
        });
        config.seed = trial;
        config.noise_std = 0.0;
        let report = feature_injection_experiment(&data, &prop, &config).unwrap();
        let norm = |s| report.outcome(s).unwrap().injected_channel_norm_after;
        let (p, i, f) = (norm(Strategy::Projector), norm(Strategy::InfluencePlus), norm(Strategy::FisherPlus));
        projector_max = projector_max.max(p);
        before_min = before_min.min(report.injected_channel_norm_before);
        influence_min = influence_min.min(i);
        fisher_min = fisher_min.min(f);
        if !(p <= 1e-12 && report.injected_channel_norm_before > 1e-3 && i > p && f > p) {
            failures.push(trial);
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && within_budget(elapsed, 120);
    outcome(
        pass,
        format!(
            "projector max {projector_max:.2e}, before min {before_min:.2e}, influence min {influence_min:.2e}, fisher min {fisher_min:.2e}, failing trials {failures:?}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let prop = PropagationConfig::new(2);
    let train_config = |seed| TrainConfig {
        lambda: 1e-4,
        eta: 1.0,
        epochs: 200,
        batch_size: None,
        seed,
    };
    let mut dist: BTreeMap<Strategy, Vec<f64>> = BTreeMap::new();
    let mut prop2_all = true;
    for seed in 0..20u64 {
        let data = csbm_data(1000, 0.01, 0.002, 16, 1000 + seed);
        let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &train_config(seed)).unwrap();
        let deleted = graph_unlearn::eval::sample_fraction(&data.train, 0.01, seed).unwrap();
        let constants = estimate_constants(&data, &prop, &model, &deleted, 20, seed).unwrap();
        prop2_all &= prop2_condition(&constants).holds;
        let retrained = retrain_baseline(&model, &data, &prop, &deleted).unwrap().weights;
        for s in [Strategy::Projector, Strategy::InfluencePlus, Strategy::FisherPlus] {
            let request = UnlearnRequest { seed, ..UnlearnRequest::new(deleted.clone(), s) };
            let w = graph_unlearn::unlearn::unlearn(&model, &data, &prop, &request, None).unwrap().weights;
            dist.entry(s).or_default().push(w.distance(&retrained));
        }
    }
    let med: BTreeMap<Strategy, f64> = dist.into_iter().map(|(k, v)| (k, median(v))).collect();
    let p = med[&Strategy::Projector];
    let i = med[&Strategy::InfluencePlus];
    let f = med[&Strategy::FisherPlus];
    let elapsed = start.elapsed();
    let pass = prop2_all && p <= i && p <= f && within_budget(elapsed, 300);
    outcome(
        pass,
        format!(
            "prop2 holds on all seeds: {prop2_all}; median ‖w_u−w_p‖ projector {p:.3e}, influence_plus {i:.3e}, fisher_plus {f:.3e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let prop = PropagationConfig::new(2);
    let mut violations = Vec::new();
    let mut slacks = Vec::new();
    for inst in 0..20u64 {
        let n = 200 + 15 * inst as usize;
        let data = csbm_data(n, 0.03, 0.005, 8, 500 + inst);
        let config = TrainConfig {
            lambda: 1e-2,
            eta: 0.2,
            epochs: 50 + 7 * inst as usize,
            batch_size: None,
            seed: inst,
        };
        let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config).unwrap();
        let deleted = graph_unlearn::eval::sample_fraction(&data.train, 0.05, inst).unwrap();
        let obs = observed_constants(&data, &prop, &model, &deleted, None).unwrap();
        if obs.observed_distance > obs.bound {
            violations.push(inst);
        }
        slacks.push(obs.slack_ratio);
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && within_budget(elapsed, 300);
    let finite: Vec<f64> = slacks.iter().copied().filter(|s| s.is_finite()).collect();
    outcome(
        pass,
        format!(
            "violations {violations:?}; slack ratio bound/observed min {:.2e}, median {:.2e}, max {:.2e}, {:.1}s",
            finite.iter().copied().fold(f64::INFINITY, f64::min),
            median(finite.clone()),
            finite.iter().copied().fold(0.0, f64::max),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let prop = PropagationConfig::new(2);
    let data = csbm_data(1000, 0.01, 0.002, 16, 66);
    let config = TrainConfig {
        lambda: 1e-3,
        eta: 1.0,
        epochs: 200,
        batch_size: None,
        seed: 6,
    };
    let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config).unwrap();
    let ratios = vec![0.01, 0.05, 0.1, 0.2];
    let sweep = SweepConfig {
        ratios: ratios.clone(),
        seeds: (0..10).collect(),
        strategies: vec![Strategy::Projector],
        noise_std: 0.0,
        finetune_k: 0,
        ridge_eps: None,
        jobs: 0,
    };
    let rows = robustness_sweep(&model, &data, &prop, &sweep).unwrap();
    let medians: Vec<f64> = ratios.iter().map(|&r| median_weight_diff(&rows, Strategy::Projector, r)).collect();
    let monotone = medians.windows(2).all(|w| w[0] <= w[1]);
    let elapsed = start.elapsed();
    outcome(
        monotone && within_budget(elapsed, 300),
        format!(
            "median normalized ‖w_u−w_p‖ at 1/5/10/20%: {}, {:.1}s",
            medians.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut r = rng(707);
    let mut worst_grad: BTreeMap<&str, f64> = BTreeMap::new();
    let mut worst_hess = 0.0f64;
    let mut worst_eig_gap = f64::INFINITY;
    for _ in 0..50 {
        let n = r.random_range(5..=30);
        let d = r.random_range(2..=8);
        let lambda = r.random_range(1e-3..1.0);
        let h = random_matrix(n, d, &mut r);
        let nodes = NodeSet::full(n);
        let binary = Labels::binary((0..n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect()).unwrap();
        let multi = Labels::multi((0..n).map(|_| r.random_range(0..3)).collect(), 3).unwrap();
        for (name, loss, labels) in [
            ("logistic", LossKind::Logistic, &binary),
            ("softmax", LossKind::Softmax, &multi),
            ("ovr", LossKind::OvrLogistic, &multi),
            ("hinge", LossKind::Hinge, &binary),
        ] {
            let rows = loss.rows_for(labels.num_classes());
            let w: Vec<f64> = (0..rows * d).map(|_| r.random_range(-1.0..1.0)).collect();
            let model = ModelWeights::new(rows, d, w.clone(), loss, Provenance::new(lambda)).unwrap();
            let f = |v: &[f64]| loss_and_grad(&model.with_data(v.to_vec()).unwrap(), &h, labels, &nodes, lambda).unwrap().objective;
            let analytic = loss_and_grad(&model, &h, labels, &nodes, lambda).unwrap().gradient;
            let step = 1e-6;
            let fd: Vec<f64> = (0..w.len())
                .map(|k| {
                    let (mut up, mut down) = (w.clone(), w.clone());
                    up[k] += step;
                    down[k] -= step;
                    (f(&up) - f(&down)) / (2.0 * step)
                })
                .collect();
            let e = worst_grad.entry(name).or_insert(0.0);
            *e = e.max(rel_diff(&analytic, &fd));

            if loss == LossKind::Logistic {
                let hess = &hessian(&model, &h, labels, &nodes, lambda).unwrap()[0];
                let g = |v: &[f64]| loss_and_grad(&model.with_data(v.to_vec()).unwrap(), &h, labels, &nodes, lambda).unwrap().gradient;
                let mut fd_h = DMatrix::zeros(d, d);
                for k in 0..d {
                    let (mut up, mut down) = (w.clone(), w.clone());
                    up[k] += 1e-5;
                    down[k] -= 1e-5;
                    let (gu, gd) = (g(&up), g(&down));
                    for j in 0..d {
                        fd_h[(j, k)] = (gu[j] - gd[j]) / 2e-5;
                    }
                }
                worst_hess = worst_hess.max((hess - &fd_h).norm() / hess.norm());
                let min_eig = SymmetricEigen::new(hess.clone()).eigenvalues.min();
                worst_eig_gap = worst_eig_gap.min(min_eig - (lambda - 1e-10));
            }
        }
    }
    let elapsed = start.elapsed();
    let grads_ok = worst_grad.values().all(|&e| e <= 1e-5);
    let pass = grads_ok && worst_hess <= 1e-5 && worst_eig_gap >= 0.0 && within_budget(elapsed, 30);
    outcome(
        pass,
        format!(
            "gradient rel err {}; Hessian rel err {worst_hess:.2e}; min eig − (λ−1e-10) ≥ {worst_eig_gap:.2e}, {:.2}s",
            worst_grad.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect::<Vec<_>>().join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut r = rng(808);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut min_steps = usize::MAX;
    for inst in 0..6u64 {
        let n = 30;
        let d = 50;
        let graph = random_graph(n, 0.1, &mut r);
        let x = random_matrix(n, d, &mut r);
        let prop = PropagationConfig::new(2);
        let h = prop.features(&graph, &x).unwrap();
        let train_set = NodeSet::new((0..20).collect());
        let h_train = h.select(&train_set).unwrap();
        let binary = Labels::binary((0..n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect()).unwrap();
        let multi = Labels::multi((0..n).map(|_| r.random_range(0..3)).collect(), 3).unwrap();
        // 20 training nodes in batches of 5: four steps per epoch
        let config = TrainConfig {
            lambda: 1e-2,
            eta: 0.5,
            epochs: 125,
            batch_size: Some(5),
            seed: inst,
        };
        let mut models = Vec::new();
        for (name, loss, labels) in [
            ("logistic", LossKind::Logistic, &binary),
            ("softmax", LossKind::Softmax, &multi),
            ("ovr", LossKind::OvrLogistic, &multi),
        ] {
            let init = ModelWeights::zeros_for(loss, labels, d, Provenance::new(config.lambda)).unwrap();
            let (m, trace) = train(&init, &h, labels, &train_set, &config).unwrap();
            min_steps = min_steps.min(trace.steps);
            models.push((name, m));
        }
        let pegasos = PegasosConfig {
            lambda: 1e-2,
            iterations: 500,
            batch_size: Some(5),
            seed: inst,
        };
        models.push(("pegasos", pegasos_train(&h, &binary, &train_set, &pegasos).unwrap()));
        for (name, m) in models {
            for c in 0..m.rows() {
                let row = m.row(c);
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let library = span_residual(row, &h_train, None).unwrap() / norm;
                let oracle = dense_span_residual(row, &h_train) / norm;
                let e = worst.entry(name).or_insert(0.0);
                *e = e.max(library.max(oracle));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst.values().all(|&v| v <= 1e-6) && min_steps >= 500 && within_budget(elapsed, 30);
    outcome(
        pass,
        format!(
            "worst relative span residual {} after ≥{min_steps} steps, {:.2}s",
            worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect::<Vec<_>>().join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut r = rng(909);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = r.random_range(3..=25);
        let d = r.random_range(1..=12);
        let x = if i % 2 == 0 { random_matrix(n, d, &mut r) } else { low_rank_matrix(n, d, r.random_range(1..=d), &mut r) };
        let value = delta_measure(&x, DeltaMode::LeaveOneOutAll, None, None).unwrap();
        let oracle = (0..n)
            .map(|j| {
                let others: Vec<usize> = (0..n).filter(|&k| k != j).collect();
                dense_span_residual(x.row(j), &x.select_rows(&others).unwrap())
            })
            .fold(0.0, f64::max);
        worst = worst.max((value - oracle).abs());
    }
    let same = FeatureMatrix::from_rows(&vec![vec![0.3, -1.2, 2.0]; 6]).unwrap();
    let identical = delta_measure(&same, DeltaMode::LeaveOneOutAll, None, None).unwrap();
    let identity = delta_measure(&FeatureMatrix::identity(7), DeltaMode::LeaveOneOutAll, None, None).unwrap();
    let elapsed = start.elapsed();
    let pass = worst <= 1e-8 && identical.abs() <= 1e-8 && (identity - 1.0).abs() <= 1e-8 && within_budget(elapsed, 10);
    outcome(
        pass,
        format!(
            "max |δ − oracle| {worst:.2e}; identical rows {identical:.2e}; identity {identity}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let prop = PropagationConfig::new(2);
    let data = csbm_data(5000, 0.002, 0.0004, 64, 10);
    let config = TrainConfig {
        lambda: 1e-3,
        eta: 1.0,
        epochs: 300,
        batch_size: None,
        seed: 10,
    };
    let (model, _) = fit_model(&data, &prop, LossKind::Logistic, &config).unwrap();
    let deleted = graph_unlearn::eval::sample_fraction(&data.train, 0.05, 10).unwrap();
    let request = UnlearnRequest::new(deleted.clone(), Strategy::Projector);
    let time = |f: &dyn Fn()| {
        f();
        let mut samples: Vec<f64> = (0..3)
            .map(|_| {
                let t = Instant::now();
                f();
                t.elapsed().as_secs_f64()
            })
            .collect();
        samples.sort_by(f64::total_cmp);
        samples[1]
    };
    let projector = time(&|| {
        projector_unlearn(&model, &data, &prop, &request, None).unwrap();
    });
    let retrain = time(&|| {
        retrain_baseline(&model, &data, &prop, &deleted).unwrap();
    });
    let ratio = retrain / projector;
    let elapsed = start.elapsed();
    outcome(
        ratio >= 10.0 && within_budget(elapsed, 180),
        format!(
            "projector {projector:.4}s, retrain {retrain:.4}s, speedup {ratio:.1}x, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Drops every `*_seconds` key from JSON and every `*_seconds` column from
/// CSV; other files compare byte for byte.
fn normalized(path: &Path) -> Vec<u8> {
    let bytes = std::fs::read(path).unwrap();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            fn strip(v: &mut serde_json::Value) {
                match v {
                    serde_json::Value::Object(map) => {
                        map.retain(|k, _| !k.ends_with("_seconds"));
                        map.values_mut().for_each(strip);
                    }
                    serde_json::Value::Array(items) => items.iter_mut().for_each(strip),
                    _ => {}
                }
            }
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            strip(&mut v);
            serde_json::to_vec(&v).unwrap()
        }
        Some("csv") => {
            let text = String::from_utf8(bytes).unwrap();
            let mut lines = text.lines();
            let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
            let keep: Vec<usize> = (0..header.len()).filter(|&i| !header[i].ends_with("_seconds")).collect();
            std::iter::once(header.join(","))
                .chain(lines.map(|l| {
                    let cells: Vec<&str> = l.split(',').collect();
                    keep.iter().map(|&i| cells[i]).collect::<Vec<_>>().join(",")
                }))
                .collect::<Vec<_>>()
                .join("\n")
                .into_bytes()
        }
        _ => bytes,
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), normalized(&path));
    }
    out
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_unlearn");
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("run");
    let gen = root.path().join("data");
    let run = |args: &[&str], dir: &Path| -> i32 {
        let status = Command::new(bin)
            .args(args)
            .arg("--out")
            .arg(dir)
            .env("UNLEARN_LOG", "error")
            .output()
            .unwrap();
        status.status.code().unwrap_or(-1)
    };
    // the generated dataset feeds every other command
    assert_eq!(run(&["generate", "--seed", "7", "--n", "200", "--dim", "6"], &gen), 0);
    let config = gen.join("config.json");
    let config = config.to_str().unwrap();
    let gram = root.path().join("gram.bin");
    let gram = gram.to_str().unwrap();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("generate", vec!["generate", "--seed", "7", "--n", "200", "--dim", "6"]),
        ("train", vec!["train", "--config", config]),
        ("unlearn", vec!["unlearn", "--config", config]),
        ("unlearn option 2", vec!["unlearn", "--config", config, "--precompute-gram", gram]),
        ("eval", vec!["eval", "--config", config, "--strategy", "influence_plus"]),
        ("inject", vec!["inject", "--config", config, "--epochs", "60"]),
        ("sweep", vec!["sweep", "--config", config, "--seeds", "2", "--ratios", "0.05,0.1", "--jobs", "2", "--epochs", "60"]),
        ("delta", vec!["delta", "--config", config]),
        ("bound", vec!["bound", "--config", config, "--epochs", "60"]),
    ];
    let mut mismatched = Vec::new();
    for (name, args) in &commands {
        let mut snapshots = Vec::new();
        for _ in 0..2 {
            let _ = std::fs::remove_dir_all(&out);
            let _ = std::fs::remove_file(gram);
            std::fs::create_dir_all(&out).unwrap();
            // unlearn reads the trained model from its output directory
            if name.starts_with("unlearn") {
                assert_eq!(run(&["train", "--config", config], &out), 0);
            }
            let code = run(args, &out);
            if code != 0 {
                mismatched.push(format!("{name} exited {code}"));
            }
            snapshots.push(snapshot(&out));
        }
        if snapshots[0] != snapshots[1] || snapshots[0].is_empty() {
            mismatched.push(name.to_string());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatched.is_empty(),
        format!(
            "{} commands rerun twice, differing: {mismatched:?}, {:.1}s",
            commands.len(),
            elapsed.as_secs_f64()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("orthogonality and idempotence", criterion_1),
        ("precomputed Gram downdate agrees with direct", criterion_2),
        ("injected channel removed exactly", criterion_3),
        ("projector closest to retraining", criterion_4),
        ("closeness bound is sound", criterion_5),
        ("distance grows with deletion ratio", criterion_6),
        ("gradient and Hessian numerics", criterion_7),
        ("span preserved by SGD", criterion_8),
        ("span-distance oracle", criterion_9),
        ("projector at least 10x faster than retraining", criterion_10),
        ("CLI determinism", criterion_11),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        // written to the raw handle so the line shows without --nocapture
        let _ = writeln!(std::io::stderr(), "{tag} criterion {}: {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
