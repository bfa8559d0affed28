//! Command-line pipeline: one subcommand per stage plus an `experiment`
//! driver that composes them. Every artifact is JSON or CSV so intermediate
//! stages stay independently inspectable.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bounds::{self, BoundParams, BoundVariant, RademacherEstimates};
use crate::clustering::{self, Clusterer, Partition};
use crate::confident::{self, ConfidentClusterSet};
use crate::data::{self, Dataset, Manifest, Sample, SplitSpec};
use crate::eval::{self, ExperimentConfig};
use crate::objective::{penalized_risk, ClusterContext};
use crate::seed;
use crate::trainer::{self, LinearModel, TrainConfig};
use crate::{Error, Result};

#[derive(Parser)]
#[command(name = "pms2l", version, about = "Penalized multiclass semi-supervised learning pipeline")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap on internal worker count (reserved; all stages currently run
    /// single-threaded for exact reproducibility).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Split a labeled pool into labeled/unlabeled training sets.
    Split(SplitArgs),
    /// Cluster the unlabeled set with seeded k-means.
    Cluster(ClusterArgs),
    /// Identify the confident clusters and their predominant classes.
    Confident(ConfidentArgs),
    /// Train the penalized (or supervised) linear model.
    Train(TrainArgs),
    /// Evaluate the generalization bound for a trained model.
    Bound(BoundArgs),
    /// Estimate clustering stability (L and delta).
    Stability(StabilityArgs),
    /// Run the full multi-trial experiment protocol.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Print the parameter schema and exit.
    #[arg(long)]
    describe: bool,
    /// Labeled pool in LIBSVM format.
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Optional test set in LIBSVM format (copied through the manifest).
    #[arg(long)]
    test: Option<PathBuf>,
    /// Fraction of the pool kept labeled.
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Minimum labeled examples per class.
    #[arg(long, default_value_t = 1)]
    min_per_class: usize,
    /// Scale all samples to unit Euclidean norm.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for labeled.svm, unlabeled.svm, manifest.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    describe: bool,
    /// Unlabeled set in LIBSVM format (labels ignored).
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    /// Number of clusters G.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for partition.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfidentArgs {
    #[arg(long)]
    describe: bool,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    /// Output path for confident.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    describe: bool,
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    confident: Option<PathBuf>,
    /// Train the supervised baseline (no penalty; partition/confident unused).
    #[arg(long)]
    supervised: bool,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
    /// Group-norm budget B.
    #[arg(long, default_value_t = 10.0)]
    norm_budget: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Select B by cross-validation over a logarithmic grid instead of using
    /// --norm-budget directly.
    #[arg(long)]
    cv_budget: bool,
    #[arg(long, default_value_t = 5)]
    cv_folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for model.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    describe: bool,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    unlabeled: Option<PathBuf>,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    confident: Option<PathBuf>,
    /// Bound shape: theorem3 or corollary4.
    #[arg(long, default_value = "theorem3")]
    variant: String,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Bounded-difference constant L (estimate with `stability`).
    #[arg(long, default_value_t = 0.0)]
    l_hat: f64,
    #[arg(long, default_value_t = 200)]
    mc_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for bound.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    describe: bool,
    /// Point pool in LIBSVM format (labels ignored).
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long, default_value_t = 200)]
    eval_size: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for stability.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    describe: bool,
    /// Experiment descriptor (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fraction: Option<f64>,
    /// Comma-separated labeled fractions: also emit a learning curve CSV.
    #[arg(long)]
    curve: Option<String>,
    /// Output directory for summary.json, trials.csv (and curve.csv).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Run the CLI; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::MissingPrerequisite { .. } => 2,
                Error::Data(_) | Error::Parse { .. } => 3,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Split(a) => cmd_split(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Confident(a) => cmd_confident(a),
        Command::Train(a) => cmd_train(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Argument(format!("--{flag} is required")))
}

fn require_input(path: &Path, stage: &'static str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingPrerequisite {
            stage,
            detail: format!("{} does not exist", path.display()),
        })
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn describe(schema: serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&schema)?);
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    if a.describe {
        return describe(json!({
            "command": "split",
            "parameters": {
                "pool": {"type": "path", "required": true, "help": "labeled pool, LIBSVM format"},
                "test": {"type": "path", "required": false, "help": "test set, LIBSVM format"},
                "fraction": {"type": "real", "default": 0.1, "help": "labeled fraction of the pool"},
                "min_per_class": {"type": "integer", "default": 1},
                "normalize": {"type": "flag", "default": false, "help": "unit-norm all samples"},
                "seed": {"type": "integer", "default": 0},
                "out_dir": {"type": "path", "required": true}
            },
            "artifacts": ["labeled.svm", "unlabeled.svm", "test.svm?", "manifest.json"]
        }));
    }
    let pool_path = require(a.pool, "pool")?;
    let out_dir = require(a.out_dir, "out-dir")?;
    fs::create_dir_all(&out_dir)?;
    let pool = data::load_libsvm(&pool_path, None)?;
    let test = match &a.test {
        Some(p) => {
            let frag = data::load_libsvm(p, Some(pool.num_classes))?;
            if frag.label_values != pool.label_values {
                return Err(Error::Data("train and test files use different label sets".into()));
            }
            frag.samples
        }
        None => Vec::new(),
    };
    let mut samples = pool.samples;
    let mut test = test;
    if a.normalize {
        samples = data::l2_normalize_samples(&samples)?;
        test = data::l2_normalize_samples(&test)?;
    }
    let spec = SplitSpec { labeled_fraction: a.fraction, per_class_minimum: a.min_per_class, seed: a.seed };
    let (labeled, unlabeled) = data::split(&samples, pool.num_classes, &spec)?;
    let dim = pool.dimension.max(
        test.iter()
            .flat_map(|s| s.features.iter().map(|&(i, _)| i as usize + 1))
            .max()
            .unwrap_or(0),
    );
    let has_test = !test.is_empty();
    let ds = Dataset::new(labeled, unlabeled, test, pool.num_classes, dim)?;
    data::write_libsvm(&out_dir.join("labeled.svm"), &ds.labeled)?;
    data::write_libsvm(&out_dir.join("unlabeled.svm"), &ds.unlabeled)?;
    if has_test {
        data::write_libsvm(&out_dir.join("test.svm"), &ds.test)?;
    }
    write_json(&out_dir.join("manifest.json"), &Manifest::of(&ds))?;
    Ok(())
}

fn load_points(path: &Path) -> Result<(Vec<Sample>, usize)> {
    let frag = data::load_libsvm(path, None)?;
    Ok((frag.samples, frag.dimension))
}

fn cmd_cluster(a: ClusterArgs) -> Result<()> {
    if a.describe {
        return describe(json!({
            "command": "cluster",
            "parameters": {
                "unlabeled": {"type": "path", "required": true, "help": "points to cluster, LIBSVM format"},
                "clusters": {"type": "integer", "required": true, "help": "number of clusters G (pipeline default 4K)"},
                "max_iters": {"type": "integer", "default": 100},
                "tolerance": {"type": "real", "default": 1e-6},
                "seed": {"type": "integer", "default": 0},
                "out": {"type": "path", "required": true}
            },
            "artifacts": ["partition.json"]
        }));
    }
    let path = require(a.unlabeled, "unlabeled")?;
    let out = require(a.out, "out")?;
    let g = require(a.clusters, "clusters")?;
    require_input(&path, "cmd_split")?;
    let (points, dim) = load_points(&path)?;
    let cfg = Clusterer {
        method: clustering::ClusterMethod::KMeans,
        num_clusters: g,
        max_iters: a.max_iters,
        tolerance: a.tolerance,
        seed: a.seed,
    };
    let partition = cfg.fit(&points, dim)?;
    write_json(&out, &partition)?;
    Ok(())
}

fn cmd_confident(a: ConfidentArgs) -> Result<()> {
    if a.describe {
        return describe(json!({
            "command": "confident",
            "parameters": {
                "partition": {"type": "path", "required": true},
                "labeled": {"type": "path", "required": true},
                "unlabeled": {"type": "path", "required": true},
                "kappa": {"type": "integer", "default": 2},
                "eta": {"type": "real", "default": 1e-3},
                "out": {"type": "path", "required": true}
            },
            "artifacts": ["confident.json"]
        }));
    }
    let partition_path = require(a.partition, "partition")?;
    let labeled_path = require(a.labeled, "labeled")?;
    let unlabeled_path = require(a.unlabeled, "unlabeled")?;
    let out = require(a.out, "out")?;
    require_input(&partition_path, "cmd_cluster")?;
    require_input(&labeled_path, "cmd_split")?;
    require_input(&unlabeled_path, "cmd_split")?;
    let partition: Partition = read_json(&partition_path)?;
    let labeled = data::load_libsvm(&labeled_path, None)?;
    let (unlabeled, _) = load_points(&unlabeled_path)?;
    let unlabeled: Vec<Sample> = unlabeled
        .into_iter()
        .map(|s| Sample::new(s.features, None))
        .collect();
    let set = confident::identify(&partition, &labeled.samples, &unlabeled, a.kappa, a.eta, labeled.num_classes)?;
    write_json(&out, &set)?;
    Ok(())
}

fn load_training_inputs(
    labeled_path: &Path,
    unlabeled_path: &Path,
) -> Result<(Dataset, usize)> {
    let labeled = data::load_libsvm(labeled_path, None)?;
    let (unlabeled_raw, udim) = load_points(unlabeled_path)?;
    let unlabeled: Vec<Sample> = unlabeled_raw
        .into_iter()
        .map(|s| Sample::new(s.features, None))
        .collect();
    let dim = labeled.dimension.max(udim);
    let k = labeled.num_classes;
    let ds = Dataset::new(labeled.samples, unlabeled, Vec::new(), k, dim)?;
    Ok((ds, dim))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    if a.describe {
        return describe(json!({
            "command": "train",
            "parameters": {
                "labeled": {"type": "path", "required": true},
                "unlabeled": {"type": "path", "required": true},
                "partition": {"type": "path", "required": "unless --supervised"},
                "confident": {"type": "path", "required": "unless --supervised"},
                "supervised": {"type": "flag", "default": false},
                "iterations": {"type": "integer", "default": 500},
                "step_scale": {"type": "real", "default": 1.0},
                "norm_budget": {"type": "real", "default": 10.0},
                "rho": {"type": "real", "default": 1.0},
                "cv_budget": {"type": "flag", "default": false},
                "cv_folds": {"type": "integer", "default": 5},
                "seed": {"type": "integer", "default": 0},
                "out": {"type": "path", "required": true}
            },
            "artifacts": ["model.json"]
        }));
    }
    let labeled_path = require(a.labeled, "labeled")?;
    let unlabeled_path = require(a.unlabeled, "unlabeled")?;
    let out = require(a.out, "out")?;
    require_input(&labeled_path, "cmd_split")?;
    require_input(&unlabeled_path, "cmd_split")?;
    let (ds, _) = load_training_inputs(&labeled_path, &unlabeled_path)?;
    let mut cfg = TrainConfig {
        iterations: a.iterations,
        step_scale: a.step_scale,
        norm_budget: a.norm_budget,
        rho: a.rho,
        seed: a.seed,
        cv_folds: a.cv_folds,
        ..TrainConfig::default()
    };
    let model = if a.supervised {
        if a.cv_budget {
            let empty = ConfidentClusterSet::empty(2, 0.0, 1);
            let partition = single_cluster_partition(&ds);
            cfg.norm_budget = trainer::select_budget(&ds, &partition, &empty, &cfg)?;
        }
        trainer::fit_supervised(&ds, &cfg)?
    } else {
        let partition_path = require(a.partition, "partition")?;
        let confident_path = require(a.confident, "confident")?;
        require_input(&partition_path, "cmd_cluster")?;
        require_input(&confident_path, "cmd_confident")?;
        let partition: Partition = read_json(&partition_path)?;
        let conf: ConfidentClusterSet = read_json(&confident_path)?;
        if a.cv_budget {
            cfg.norm_budget = trainer::select_budget(&ds, &partition, &conf, &cfg)?;
        }
        trainer::fit(&ds, &partition, &conf, &cfg)?
    };
    write_json(&out, &model)?;
    Ok(())
}

/// Degenerate one-cluster partition used when budget selection runs without
/// a clustering stage (supervised baseline).
fn single_cluster_partition(ds: &Dataset) -> Partition {
    Partition {
        num_clusters: 1,
        assign: vec![0; ds.u()],
        centers: Some(vec![vec![0.0; ds.dimension]]),
    }
}

fn cmd_bound(a: BoundArgs) -> Result<()> {
    if a.describe {
        return describe(json!({
            "command": "bound",
            "parameters": {
                "model": {"type": "path", "required": true},
                "labeled": {"type": "path", "required": true},
                "unlabeled": {"type": "path", "required": true},
                "partition": {"type": "path", "required": true},
                "confident": {"type": "path", "required": true},
                "variant": {"type": "string", "default": "theorem3", "choices": ["theorem3", "corollary4"]},
                "delta": {"type": "real", "default": 0.05},
                "l_hat": {"type": "real", "default": 0.0, "help": "bounded-difference constant; see `stability`"},
                "mc_draws": {"type": "integer", "default": 200},
                "seed": {"type": "integer", "default": 0},
                "out": {"type": "path", "required": true}
            },
            "artifacts": ["bound.json"]
        }));
    }
    let model_path = require(a.model, "model")?;
    let labeled_path = require(a.labeled, "labeled")?;
    let unlabeled_path = require(a.unlabeled, "unlabeled")?;
    let partition_path = require(a.partition, "partition")?;
    let confident_path = require(a.confident, "confident")?;
    let out = require(a.out, "out")?;
    require_input(&model_path, "cmd_train")?;
    require_input(&partition_path, "cmd_cluster")?;
    require_input(&confident_path, "cmd_confident")?;
    require_input(&labeled_path, "cmd_split")?;
    require_input(&unlabeled_path, "cmd_split")?;

    let model: LinearModel = read_json(&model_path)?;
    let partition: Partition = read_json(&partition_path)?;
    let conf: ConfidentClusterSet = read_json(&confident_path)?;
    let (ds, _) = load_training_inputs(&labeled_path, &unlabeled_path)?;
    let ctx = ClusterContext::new(&partition, &conf, &ds.labeled, &ds.unlabeled, ds.num_classes)?;
    let risk = penalized_risk(&model, &ds.labeled, &ds.unlabeled, &ctx, model.rho)?;

    let confident_ids: std::collections::BTreeSet<usize> =
        conf.clusters.iter().map(|c| c.cluster_id).collect();
    let pick = |samples: &[Sample], assign: &[usize], inside: bool| -> Vec<Sample> {
        samples
            .iter()
            .zip(assign.iter())
            .filter(|&(_, c)| confident_ids.contains(c) == inside)
            .map(|(s, _)| s.clone())
            .collect()
    };
    let labeled_in = pick(&ds.labeled, &ctx.labeled_assign, true);
    let labeled_out = pick(&ds.labeled, &ctx.labeled_assign, false);
    let unlabeled_in = pick(&ds.unlabeled, &ctx.unlabeled_assign, true);
    let rad = RademacherEstimates {
        r_star_n: bounds::mc_rademacher_linear(&labeled_in, ds.n(), model.norm_budget, a.mc_draws, seed::derive(a.seed, 1))?,
        r_star_u: bounds::mc_rademacher_linear(&unlabeled_in, ds.u(), model.norm_budget, a.mc_draws, seed::derive(a.seed, 2))?,
        r_n: bounds::mc_rademacher_linear(&labeled_out, ds.n(), model.norm_budget, a.mc_draws, seed::derive(a.seed, 3))?,
        mc_draws: a.mc_draws,
        closed_form_r_star_n: bounds::closed_form_rademacher(conf.num_clusters, conf.n_eta, ds.n(), ds.feature_radius, model.norm_budget),
        closed_form_r_star_u: bounds::closed_form_rademacher(conf.num_clusters, conf.u_eta, ds.u(), ds.feature_radius, model.norm_budget),
        closed_form_r_n: bounds::closed_form_rademacher(1, ds.n() - conf.n_eta, ds.n(), ds.feature_radius, model.norm_budget),
    };
    let params = BoundParams {
        n: ds.n(),
        u: ds.u(),
        num_clusters: conf.num_clusters,
        num_classes: ds.num_classes,
        kappa: conf.kappa,
        rho: model.rho,
        delta: a.delta,
        l_hat: a.l_hat,
        n_eta: conf.n_eta,
        u_eta: conf.u_eta,
        feature_radius: ds.feature_radius,
        norm_budget: model.norm_budget,
    };
    let report = match a.variant.as_str() {
        "theorem3" => bounds::theorem3_bound(&risk, &rad, &params)?,
        "corollary4" => bounds::corollary4_bound(&risk, &params)?,
        other => return Err(Error::Argument(format!("unknown variant '{other}'"))),
    };
    let lemma2 = bounds::lemma2_diagnostics(&conf, &risk, &params)?;
    write_json(&out, &json!({
        "report": report,
        "rademacher": rad,
        "per_cluster": lemma2,
    }))?;
    let _ = BoundVariant::Theorem3;
    Ok(())
}

fn cmd_stability(a: StabilityArgs) -> Result<()> {
    if a.describe {
        return describe(json!({
            "command": "stability",
            "parameters": {
                "pool": {"type": "path", "required": true, "help": "points, LIBSVM format (labels ignored)"},
                "clusters": {"type": "integer", "required": true},
                "sample_size": {"type": "integer", "default": "half the pool"},
                "eval_size": {"type": "integer", "default": 200},
                "trials": {"type": "integer", "default": 20},
                "delta": {"type": "real", "default": 0.05},
                "seed": {"type": "integer", "default": 0},
                "out": {"type": "path", "required": true}
            },
            "artifacts": ["stability.json"]
        }));
    }
    let pool_path = require(a.pool, "pool")?;
    let out = require(a.out, "out")?;
    let g = require(a.clusters, "clusters")?;
    require_input(&pool_path, "cmd_split")?;
    let (pool, dim) = load_points(&pool_path)?;
    let sample_size = a.sample_size.unwrap_or(pool.len() / 2);
    let eval_size = a.eval_size.min(pool.len().saturating_sub(sample_size + 1));
    if eval_size == 0 {
        return Err(Error::Argument("pool too small for the requested sample size".into()));
    }
    let cfg = Clusterer::kmeans(g, a.seed);
    let l_hat = clustering::estimate_bounded_difference(
        &cfg, &pool, dim, sample_size, eval_size, a.trials, seed::derive(a.seed, 11),
    )?;
    let mut rng = seed::rng(seed::derive(a.seed, 12));
    let eval_idx = data::sample_indices_sorted(&mut rng, pool.len(), eval_size);
    let eval_set: Vec<Sample> = eval_idx.iter().map(|&i| pool[i].clone()).collect();
    let est = clustering::estimate_stability(
        &cfg, &pool, dim, sample_size, &eval_set, a.trials, seed::derive(a.seed, 13),
    )?;
    let eta = confident::eta_from_stability(l_hat, sample_size.max(2), pool.len().max(2), a.delta)?;
    write_json(&out, &json!({
        "L_hat": l_hat,
        "delta_hat": est.delta_hat,
        "trials": a.trials,
        "suggested_eta": eta,
    }))?;
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    if a.describe {
        return describe(json!({
            "command": "experiment",
            "parameters": {
                "config": {"type": "path", "required": true, "help": "experiment descriptor (JSON); flags override"},
                "trials": {"type": "integer", "default": "from config"},
                "seed": {"type": "integer", "default": "from config"},
                "fraction": {"type": "real", "default": "from config"},
                "curve": {"type": "string", "required": false, "help": "comma-separated labeled fractions"},
                "out_dir": {"type": "path", "required": true}
            },
            "artifacts": ["summary.json", "trials.csv", "curve.csv?"]
        }));
    }
    let config_path = require(a.config, "config")?;
    let out_dir = require(a.out_dir, "out-dir")?;
    if !config_path.exists() {
        return Err(Error::Argument(format!("config {} does not exist", config_path.display())));
    }
    let mut cfg: ExperimentConfig = read_json(&config_path)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(f) = a.fraction {
        cfg.labeled_fraction = f;
    }
    fs::create_dir_all(&out_dir)?;
    let (summary, trials) = eval::run_experiment(&cfg)?;
    write_json(&out_dir.join("summary.json"), &summary)?;

    let mut csv = String::from("method,seed,accuracy,bound,risk\n");
    for t in &trials {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            t.method.name(),
            t.trial_seed,
            t.test_accuracy,
            t.bound_total.map(|b| b.to_string()).unwrap_or_default(),
            t.empirical_risk
        ));
    }
    fs::write(out_dir.join("trials.csv"), csv)?;

    if let Some(spec) = &a.curve {
        let fractions: Vec<f64> = spec
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Argument(format!("bad fraction '{s}'"))))
            .collect::<Result<_>>()?;
        let points = eval::learning_curve(&cfg, &fractions)?;
        let mut csv = String::from("fraction,method,mean,std\n");
        for p in &points {
            csv.push_str(&format!("{},{},{},{}\n", p.fraction, p.method.name(), p.mean, p.std));
        }
        fs::write(out_dir.join("curve.csv"), csv)?;
    }
    Ok(())
}
