//! The `unlearn` command line: argument parsing, command implementations and
//! the mapping from errors to exit codes.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::{DatasetConfig, DatasetSource, DeleteSpec, ExperimentConfig};
use crate::dataset::GnnData;
use crate::error::{Error, Result};
use crate::eval::{
    compare_to_retrain, feature_injection_experiment, median_weight_diff, robustness_sweep,
    write_sweep_csv, InjectionConfig, InjectionLabels, SweepConfig,
};
use crate::features::{
    delta_measure, gram_precompute, read_gram, write_features_csv, write_gram, DeltaMode,
    SpanProjector,
};
use crate::graph::{generate_csbm, write_edge_list};
use crate::linear_model::{evaluate, read_model, write_labels, write_model, LossKind, ModelWeights};
use crate::unlearn::{fit_model, observed_constants, unlearn, Strategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_INCOMPATIBLE: i32 = 3;
pub const EXIT_EMPTY_REMAINING: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } | Error::Factorization(_) | Error::CapacitanceSingular { .. } => {
            EXIT_DIVERGENCE
        }
        Error::Unsupported { .. } | Error::DimensionMismatch(_) | Error::TooLarge { .. } => {
            EXIT_INCOMPATIBLE
        }
        Error::EmptyRemaining(_) => EXIT_EMPTY_REMAINING,
        Error::Io { .. } | Error::Parse { .. } | Error::Json(_) => EXIT_IO,
        Error::Config { .. } | Error::InvalidInput(_) | Error::NodeOutOfRange { .. } => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "unlearn", version, about = "Exact node-feature unlearning for linear graph neural networks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

/// Config overrides; a flag always wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// projector, influence_plus, fisher_plus or retrain.
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    /// Training loss.
    #[arg(long, global = true, value_enum)]
    pub loss: Option<LossArg>,
    /// L2 regularization strength.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Learning rate.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Training epochs `T`.
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    /// Mini-batch size; full batch when absent.
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Propagation hops `L`.
    #[arg(long, global = true)]
    pub hops: Option<usize>,
    /// Delete this fraction of the training nodes at random.
    #[arg(long, global = true, conflicts_with = "delete_ids")]
    pub delete_fraction: Option<f64>,
    /// Delete these training nodes (comma separated; empty for none).
    #[arg(long, global = true, value_delimiter = ',', num_args = 0..)]
    pub delete_ids: Option<Vec<usize>>,
    /// Gaussian noise std added by the approximate strategies.
    #[arg(long, global = true)]
    pub noise_std: Option<f64>,
    /// Fine-tuning steps after unlearning.
    #[arg(long, global = true)]
    pub finetune_k: Option<usize>,
    /// Ridge for the span projection; scaled to the Gram trace when absent.
    #[arg(long, global = true)]
    pub ridge_eps: Option<f64>,
    /// Std of Gaussian noise added to the raw features before training.
    #[arg(long, global = true)]
    pub feature_jitter: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Logistic,
    Softmax,
    Ovr,
    Hinge,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Logistic => LossKind::Logistic,
            LossArg::Softmax => LossKind::Softmax,
            LossArg::Ovr => LossKind::OvrLogistic,
            LossArg::Hinge => LossKind::Hinge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaArg {
    LeaveOneOut,
    AgainstSet,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a CSBM graph with features and labels.
    Generate {
        /// Number of nodes.
        #[arg(long)]
        n: Option<usize>,
        /// Intra-class edge probability.
        #[arg(long)]
        p: Option<f64>,
        /// Inter-class edge probability.
        #[arg(long)]
        q: Option<f64>,
        /// Feature dimension.
        #[arg(long)]
        dim: Option<usize>,
        /// Distance between the two class means.
        #[arg(long)]
        separation: Option<f64>,
    },
    /// Train a model on the configured dataset.
    Train,
    /// Unlearn the configured deletion set from a trained model.
    Unlearn {
        /// Trained model; defaults to `<out>/model.bin`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Full-data Gram matrix to downdate; computed and written when the
        /// file does not exist yet.
        #[arg(long)]
        precompute_gram: Option<PathBuf>,
    },
    /// Compare the configured strategy with retraining.
    Eval {
        /// Trained model; defaults to `<out>/model.bin`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Feature-injection experiment.
    Inject {
        /// Flip binary labels instead of adding a class for the deleted nodes.
        #[arg(long)]
        flip: bool,
        /// Run each strategy once untimed first.
        #[arg(long)]
        warmup: bool,
    },
    /// Closeness to retraining over deletion ratios and seeds.
    Sweep {
        /// Deletion fractions of the training set.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.05, 0.1, 0.2])]
        ratios: Vec<f64>,
        /// Number of seeds, counting up from the root seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Strategies compared against retraining.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["projector".to_string(), "influence_plus".to_string(), "fisher_plus".to_string()])]
        strategies: Vec<String>,
        /// CSV destination; defaults to `<out>/sweep.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// How far feature rows sit from the span of the others.
    Delta {
        /// Every row against the rest, or the deletion set against the rest.
        #[arg(long, value_enum, default_value_t = DeltaArg::LeaveOneOut)]
        mode: DeltaArg,
    },
    /// Closeness bound against the observed distance to retraining.
    Bound {
        /// Trained model; defaults to `<out>/model.bin`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Config after applying the file, then the flags.
pub fn resolve_config(common: &Common, overrides: &Overrides) -> Result<ExperimentConfig> {
    let mut c = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(o) = &common.out {
        c.output_dir = o.clone();
    }
    let o = overrides;
    if let Some(s) = &o.strategy {
        c.unlearn.strategy = s.parse()?;
    }
    if let Some(l) = o.loss {
        c.model.loss = l.into();
    }
    if let Some(v) = o.lambda {
        c.model.lambda = v;
    }
    if let Some(v) = o.eta {
        c.model.eta = v;
    }
    if let Some(v) = o.epochs {
        c.model.epochs = v;
    }
    if let Some(v) = o.batch_size {
        c.model.batch_size = Some(v);
    }
    if let Some(v) = o.hops {
        c.propagation.hops = v;
    }
    if let Some(f) = o.delete_fraction {
        c.unlearn.delete = DeleteSpec::RandomFraction(f);
    }
    if let Some(ids) = &o.delete_ids {
        c.unlearn.delete = DeleteSpec::ExplicitIds(ids.clone());
    }
    if let Some(v) = o.noise_std {
        c.unlearn.noise_std = v;
    }
    if let Some(v) = o.finetune_k {
        c.unlearn.finetune_k = v;
    }
    if let Some(v) = o.ridge_eps {
        c.unlearn.ridge_eps = Some(v);
    }
    if let Some(v) = o.feature_jitter {
        c.dataset.feature_jitter = Some(v);
    }
    Ok(c)
}

fn execute(cli: &Cli) -> Result<()> {
    if cli.common.jobs == 0 {
        return Err(Error::config("jobs", "must be positive"));
    }
    let config = resolve_config(&cli.common, &cli.overrides)?;
    let out = config.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let jobs = cli.common.jobs;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Generate { n, p, q, dim, separation } => {
            cmd_generate(&config, &out, GenerateOverrides { n: *n, p: *p, q: *q, dim: *dim, separation: *separation })
        }
        Command::Train => cmd_train(&config, &out),
        Command::Unlearn { model, precompute_gram } => {
            cmd_unlearn(&config, &out, model.as_deref(), precompute_gram.as_deref())
        }
        Command::Eval { model } => cmd_eval(&config, &out, model.as_deref()),
        Command::Inject { flip, warmup } => cmd_inject(&config, &out, *flip, *warmup),
        Command::Sweep { ratios, seeds, strategies, csv } => {
            let strategies = strategies.iter().map(|s| s.parse()).collect::<Result<Vec<Strategy>>>()?;
            let sweep = SweepConfig {
                ratios: ratios.clone(),
                seeds: (0..*seeds).map(|i| config.seed.wrapping_add(i)).collect(),
                strategies,
                noise_std: config.unlearn.noise_std,
                finetune_k: config.unlearn.finetune_k,
                ridge_eps: config.unlearn.ridge_eps,
                jobs,
            };
            cmd_sweep(&config, &out, &sweep, csv.as_deref())
        }
        Command::Delta { mode } => cmd_delta(&config, &out, *mode),
        Command::Bound { model } => cmd_bound(&config, &out, model.as_deref()),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn print_rows(title: &str, rows: &[(&str, String)]) {
    println!("{title}");
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in rows {
        println!("  {k:<width$}  {v}");
    }
}

fn fmt<T: Display>(v: T) -> String {
    v.to_string()
}

/// CSBM overrides for `generate`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GenerateOverrides {
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub dim: Option<usize>,
    pub separation: Option<f64>,
}

/// Writes `edges.tsv`, `features.csv`, `labels.txt`, `manifest.json` and a
/// `config.json` that trains on those files.
pub fn cmd_generate(config: &ExperimentConfig, out: &Path, o: GenerateOverrides) -> Result<()> {
    let mut spec = match &config.dataset.source {
        DatasetSource::Csbm(spec) => spec.clone(),
        DatasetSource::Files { .. } => Default::default(),
    };
    spec.n = o.n.unwrap_or(spec.n);
    spec.p = o.p.unwrap_or(spec.p);
    spec.q = o.q.unwrap_or(spec.q);
    spec.dim = o.dim.unwrap_or(spec.dim);
    spec.separation = o.separation.unwrap_or(spec.separation);
    let mut checked = config.clone();
    checked.dataset.source = DatasetSource::Csbm(spec.clone());
    checked.validate()?;
    let params = spec.params(config.seed);
    let (graph, x, labels) = generate_csbm(&params)?;
    let edges = out.join("edges.tsv");
    let features = out.join("features.csv");
    let labels_path = out.join("labels.txt");
    write_edge_list(&graph, &edges)?;
    write_features_csv(&x, &features)?;
    write_labels(&labels, &labels_path)?;
    let components = graph.connected_components();
    write_json(
        &out.join("manifest.json"),
        &json!({
            "seed": config.seed,
            "params": params,
            "num_nodes": graph.num_nodes(),
            "num_edges": graph.num_edges(),
            "connected_components": components,
            "files": {"edges": "edges.tsv", "features": "features.csv", "labels": "labels.txt"},
        }),
    )?;
    let mut follow_up = config.clone();
    follow_up.dataset = DatasetConfig {
        source: DatasetSource::Files {
            edges: "edges.tsv".into(),
            features: "features.csv".into(),
            labels: "labels.txt".into(),
        },
        train_fraction: config.dataset.train_fraction,
        feature_jitter: config.dataset.feature_jitter,
    };
    write_json(&out.join("config.json"), &follow_up)?;
    print_rows(
        "generated CSBM graph",
        &[
            ("nodes", fmt(graph.num_nodes())),
            ("edges", fmt(graph.num_edges())),
            ("components", fmt(components)),
            ("seed", fmt(config.seed)),
        ],
    );
    Ok(())
}

fn span_residual_of(model: &ModelWeights, data: &GnnData) -> Result<f64> {
    let d = data.features.dim();
    let projector = SpanProjector::from_state(&gram_precompute(&data.features), None)?;
    let mut worst: f64 = 0.0;
    for c in 0..model.rows() {
        for block in model.row(c).chunks(d) {
            worst = worst.max(projector.residual(block));
        }
    }
    Ok(worst)
}

fn train_from_config(config: &ExperimentConfig, data: &GnnData) -> Result<(ModelWeights, crate::linear_model::TrainTrace)> {
    fit_model(data, &config.propagation, config.model.loss, &config.train_config())
}

fn model_or_train(config: &ExperimentConfig, data: &GnnData, model: Option<&Path>) -> Result<ModelWeights> {
    match model {
        Some(path) => read_model(path),
        None => Ok(train_from_config(config, data)?.0),
    }
}

/// Trains and writes `model.bin` and `train_trace.json`.
pub fn cmd_train(config: &ExperimentConfig, out: &Path) -> Result<()> {
    config.validate()?;
    let data = config.load_data()?;
    let (model, trace) = train_from_config(config, &data)?;
    let span_residual = span_residual_of(&model, &data)?;
    let norm = model.norm();
    let relative = if norm > 0.0 { span_residual / norm } else { 0.0 };
    let h = data.inputs(&config.propagation)?;
    let train_acc = evaluate(&model, &h, &data.labels, &data.train).accuracy;
    let test_acc = evaluate(&model, &h, &data.labels, &data.test).accuracy;
    write_model(&model, &out.join("model.bin"))?;
    write_json(
        &out.join("train_trace.json"),
        &json!({
            "loss": model.loss,
            "final_objective": trace.final_objective(),
            "span_residual": span_residual,
            "relative_span_residual": relative,
            "weight_norm": norm,
            "train_accuracy": train_acc,
            "test_accuracy": test_acc,
            "steps": trace.steps,
            "objectives": trace.objectives,
            "gradient_norms": trace.gradient_norms,
            "elapsed_seconds": trace.elapsed_seconds,
        }),
    )?;
    print_rows(
        "trained model",
        &[
            ("loss", model.loss.name().to_string()),
            ("final objective", trace.final_objective().map_or("n/a".into(), fmt)),
            ("span residual", format!("{span_residual:e}")),
            ("train accuracy", fmt(train_acc)),
            ("test accuracy", fmt(test_acc)),
        ],
    );
    Ok(())
}

/// Runs the configured strategy and writes `model_unlearned.bin` and
/// `unlearn_result.json`.
pub fn cmd_unlearn(config: &ExperimentConfig, out: &Path, model: Option<&Path>, gram_path: Option<&Path>) -> Result<()> {
    config.validate()?;
    let data = config.load_data()?;
    let model_path = model.map_or_else(|| out.join("model.bin"), Path::to_path_buf);
    let model = read_model(&model_path)?;
    let deleted = config.unlearn.delete.select(&data, config.seed)?;
    let gram = match gram_path {
        Some(path) if path.exists() => Some(read_gram(path)?),
        Some(path) => {
            let g = gram_precompute(&data.features).with_inverse(config.unlearn.ridge_eps)?;
            write_gram(&g, path)?;
            Some(g)
        }
        None => None,
    };
    let result = unlearn(&model, &data, &config.propagation, &config.request(deleted.clone()), gram.as_ref())?;
    let out_model = out.join("model_unlearned.bin");
    write_model(&result.weights, &out_model)?;
    write_json(
        &out.join("unlearn_result.json"),
        &json!({
            "strategy": result.strategy,
            "deleted_count": deleted.len(),
            "deleted": deleted.as_slice(),
            "elapsed_seconds": result.elapsed_seconds,
            "diagnostics": result.diagnostics,
            "model_path": out_model,
        }),
    )?;
    let mut rows = vec![
        ("strategy", result.strategy.to_string()),
        ("deleted nodes", fmt(deleted.len())),
        ("model", out_model.display().to_string()),
    ];
    if let Some(r) = result.diagnostics.orthogonality_residual {
        rows.push(("orthogonality residual", format!("{r:e}")));
    }
    print_rows("unlearned", &rows);
    Ok(())
}

/// Compares the configured strategy with retraining; writes
/// `eval_report.json`.
pub fn cmd_eval(config: &ExperimentConfig, out: &Path, model: Option<&Path>) -> Result<()> {
    config.validate()?;
    let data = config.load_data()?;
    let prop = &config.propagation;
    let model = model_or_train(config, &data, model)?;
    let deleted = config.unlearn.delete.select(&data, config.seed)?;
    let result = unlearn(&model, &data, prop, &config.request(deleted.clone()), None)?;
    let mut retrain_request = config.request(deleted.clone());
    retrain_request.strategy = Strategy::Retrain;
    let retrained = unlearn(&model, &data, prop, &retrain_request, None)?;
    let report = compare_to_retrain(&model, &result.weights, &retrained.weights, &data, prop, &deleted)?;
    let (remaining, _) = data.delete(&deleted)?;
    let h_after = remaining.inputs(prop)?;
    let acc = |w: &ModelWeights, h| evaluate(w, h, &remaining.labels, &remaining.test).accuracy;
    let original = acc(&model, &h_after);
    let unlearned = acc(&result.weights, &h_after);
    let retrain = acc(&retrained.weights, &h_after);
    write_json(
        &out.join("eval_report.json"),
        &json!({
            "strategy": result.strategy,
            "deleted_count": deleted.len(),
            "closeness": report,
            "test_accuracy": {"original": original, "unlearned": unlearned, "retrained": retrain},
            "unlearn_seconds": result.elapsed_seconds,
            "retrain_seconds": retrained.elapsed_seconds,
        }),
    )?;
    let mut rows = vec![
        ("strategy", result.strategy.to_string()),
        ("normalized weight diff", format!("{:e}", report.normalized_weight_diff)),
    ];
    let names: Vec<String> = report.activation_distance.keys().map(|k| format!("activation {k}")).collect();
    for (name, v) in names.iter().zip(report.activation_distance.values()) {
        rows.push((name, format!("{v:e}")));
    }
    rows.push(("test accuracy", format!("{unlearned} (retrain {retrain})")));
    print_rows("closeness to retraining", &rows);
    Ok(())
}

/// Feature-injection experiment; writes `inject_report.json`.
pub fn cmd_inject(config: &ExperimentConfig, out: &Path, flip: bool, warmup: bool) -> Result<()> {
    config.validate()?;
    let data = config.load_data()?;
    let fraction = match config.unlearn.delete {
        DeleteSpec::RandomFraction(f) => f,
        _ => return Err(Error::config("unlearn.delete", "inject needs random_fraction")),
    };
    let injection = InjectionConfig {
        delete_fraction: fraction,
        strategies: vec![Strategy::Projector, Strategy::InfluencePlus, Strategy::FisherPlus],
        labels: if flip { InjectionLabels::Flip } else { InjectionLabels::NewClass },
        loss: (config.model.loss != LossKind::Logistic).then_some(config.model.loss),
        train: config.train_config(),
        noise_std: config.unlearn.noise_std,
        finetune_k: config.unlearn.finetune_k,
        seed: config.seed,
        warmup,
    };
    let report = feature_injection_experiment(&data, &config.propagation, &injection)?;
    write_json(&out.join("inject_report.json"), &report)?;
    println!("injected channel, {} deleted nodes", report.deleted_count);
    println!("  {:<16}{:>16}{:>12}{:>14}", "strategy", "channel norm", "accuracy", "seconds");
    println!(
        "  {:<16}{:>16.3e}{:>12.4}{:>14}",
        "before", report.injected_channel_norm_before, report.accuracy_before, "-"
    );
    for o in &report.outcomes {
        println!(
            "  {:<16}{:>16.3e}{:>12.4}{:>14.3e}",
            o.strategy.name(),
            o.injected_channel_norm_after,
            o.accuracy_after,
            o.unlearn_seconds
        );
    }
    println!("  {:<16}{:>16}{:>12.4}{:>14.3e}", "retrain", "-", report.retrain_accuracy, report.retrain_seconds);
    Ok(())
}

/// Robustness sweep; writes `sweep.json` and the CSV table.
pub fn cmd_sweep(config: &ExperimentConfig, out: &Path, sweep: &SweepConfig, csv: Option<&Path>) -> Result<()> {
    config.validate()?;
    for &r in &sweep.ratios {
        DeleteSpec::RandomFraction(r).validate("ratios")?;
    }
    let data = config.load_data()?;
    let (model, _) = train_from_config(config, &data)?;
    let rows = robustness_sweep(&model, &data, &config.propagation, sweep)?;
    write_json(&out.join("sweep.json"), &rows)?;
    let csv_path = csv.map_or_else(|| out.join("sweep.csv"), Path::to_path_buf);
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).map_err(|e| Error::io(&csv_path, e))?;
    std::fs::write(&csv_path, buf).map_err(|e| Error::io(&csv_path, e))?;
    print!("  {:<10}", "ratio");
    for s in &sweep.strategies {
        print!("{:>18}", s.name());
    }
    println!();
    for &r in &sweep.ratios {
        print!("  {r:<10}");
        for &s in &sweep.strategies {
            print!("{:>18.4e}", median_weight_diff(&rows, s, r));
        }
        println!();
    }
    Ok(())
}

/// Span-distance measure of the raw features; writes `delta.json`.
pub fn cmd_delta(config: &ExperimentConfig, out: &Path, mode: DeltaArg) -> Result<()> {
    config.validate()?;
    let data = config.load_data()?;
    let (mode, set) = match mode {
        DeltaArg::LeaveOneOut => (DeltaMode::LeaveOneOutAll, None),
        DeltaArg::AgainstSet => (DeltaMode::AgainstSet, Some(config.unlearn.delete.select(&data, config.seed)?)),
    };
    let value = delta_measure(&data.features, mode, set.as_ref(), config.unlearn.ridge_eps)?;
    write_json(
        &out.join("delta.json"),
        &json!({
            "mode": mode,
            "delta": value,
            "rows": data.features.rows(),
            "dim": data.features.dim(),
        }),
    )?;
    println!("delta {value}");
    Ok(())
}

/// Closeness bound with observed constants; writes `bound.json`.
pub fn cmd_bound(config: &ExperimentConfig, out: &Path, model: Option<&Path>) -> Result<()> {
    config.validate()?;
    let data = config.load_data()?;
    let model = model_or_train(config, &data, model)?;
    let deleted = config.unlearn.delete.select(&data, config.seed)?;
    let observed = observed_constants(&data, &config.propagation, &model, &deleted, config.unlearn.ridge_eps)?;
    write_json(
        &out.join("bound.json"),
        &json!({
            "constants": observed.constants,
            "bound": observed.bound,
            "observed_distance": observed.observed_distance,
            "slack_ratio": observed.slack_ratio,
            "prop2": observed.prop2,
        }),
    )?;
    print_rows(
        "closeness bound",
        &[
            ("bound", fmt(observed.bound)),
            ("observed", fmt(observed.observed_distance)),
            ("slack ratio", fmt(observed.slack_ratio)),
            ("prop2 threshold", fmt(observed.prop2.threshold)),
            ("prop2 holds", fmt(observed.prop2.holds)),
        ],
    );
    Ok(())
}
