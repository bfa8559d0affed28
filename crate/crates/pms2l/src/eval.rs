//! Experiment harness: repeated trials over resampled labeled/unlabeled
//! splits of a fixed pool, accuracy statistics, the Wilcoxon rank-sum test,
//! learning curves, and bound-validity accounting.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundParams, RademacherEstimates};
use crate::clustering::{self, Clusterer};
use crate::confident;
use crate::data::{self, Dataset, Sample, SplitSpec};
use crate::objective::{penalized_risk, ClusterContext};
use crate::seed;
use crate::trainer::{self, TrainConfig};
use crate::{Error, Result};

/// Fraction of test samples predicted correctly.
pub fn accuracy(model: &trainer::LinearModel, test: &[Sample]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Argument("empty test set".into()));
    }
    let mut correct = 0usize;
    for s in test {
        let y = s
            .label
            .ok_or_else(|| Error::Argument("test sample without label".into()))?;
        if trainer::predict(model, s) == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Two-sided Wilcoxon rank-sum test via the normal approximation with tie
/// correction and continuity correction.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 4 || b.len() < 4 {
        return Err(Error::Argument(format!(
            "need at least 4 observations per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let total = a.len() + b.len();

    // Pool, sort, and assign average ranks to ties.
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0usize;
    while i < total {
        let mut j = i;
        while j + 1 < total && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let count = (j - i + 1) as f64;
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for item in &pooled[i..=j] {
            if item.1 {
                rank_sum_a += avg_rank;
            }
        }
        tie_term += count * count * count - count;
        i = j + 1;
    }

    let nn = total as f64;
    let mean = na * (nn + 1.0) / 2.0;
    let variance = na * nb / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if variance <= 0.0 {
        // All pooled values identical: no evidence of a shift.
        return Ok(1.0);
    }
    let diff = rank_sum_a - mean;
    // Continuity correction: shrink the statistic by half a rank toward 0.
    let corrected = if diff > 0.5 {
        diff - 0.5
    } else if diff < -0.5 {
        diff + 0.5
    } else {
        0.0
    };
    let z = corrected / variance.sqrt();
    Ok(erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0))
}

/// Complementary error function (Abramowitz & Stegun 7.1.26, |error| < 1.5e-7).
fn erfc(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Which training methods an experiment compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SUP")]
    Sup,
    #[serde(rename = "PMS2L")]
    Pms2l,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Sup => "SUP",
            Method::Pms2l => "PMS2L",
        }
    }
}

/// Data source of an experiment: a synthetic blob draw or a pair of files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic {
        num_classes: usize,
        per_class: usize,
        separation: f64,
        noise: f64,
        test_per_class: usize,
    },
    Files {
        train: PathBuf,
        test: PathBuf,
    },
}

fn default_trials() -> usize {
    10
}
fn default_kappa() -> usize {
    2
}
fn default_eta() -> f64 {
    1e-3
}
fn default_rho() -> f64 {
    1.0
}
fn default_norm_budget() -> f64 {
    10.0
}
fn default_step_scale() -> f64 {
    1.0
}
fn default_iterations() -> usize {
    500
}
fn default_delta() -> f64 {
    0.05
}
fn default_mc_draws() -> usize {
    200
}
fn default_stability_trials() -> usize {
    10
}
fn default_per_class_minimum() -> usize {
    1
}
fn default_methods() -> Vec<Method> {
    vec![Method::Sup, Method::Pms2l]
}

/// Full experiment descriptor; JSON-serializable, flags may override fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub labeled_fraction: f64,
    #[serde(default = "default_per_class_minimum")]
    pub per_class_minimum: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Number of clusters G; defaults to 4K when absent.
    #[serde(default)]
    pub num_clusters: Option<usize>,
    #[serde(default = "default_kappa")]
    pub kappa: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_norm_budget")]
    pub norm_budget: f64,
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Scale every sample to unit norm before use.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Evaluate the Theorem-3-shape bound per trial (needs a stability
    /// estimate; slower).
    #[serde(default)]
    pub compute_bounds: bool,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    #[serde(default = "default_stability_trials")]
    pub stability_trials: usize,
}

/// One method's outcome on one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    pub trial_seed: u64,
    pub test_accuracy: f64,
    pub bound_total: Option<f64>,
    pub empirical_risk: f64,
}

/// Aggregate statistics of one method across trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodStats {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub trials: usize,
}

/// Aggregated experiment outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub per_method: BTreeMap<String, MethodStats>,
    /// Wilcoxon rank-sum p for SUP vs PMS2L accuracies (1.0 when only one
    /// method ran).
    pub p_value: f64,
    /// Fraction of trials whose test 0/1 risk exceeded the computed bound;
    /// absent when bounds were not computed.
    pub bound_violation_rate: Option<f64>,
    /// Estimated bounded-difference constant used in the bounds, if any.
    pub l_hat: Option<f64>,
}

// Seed stream tags.
const TAG_DATA: u64 = 1;
const TAG_SPLIT: u64 = 2;
const TAG_CLUSTER: u64 = 3;
const TAG_LHAT: u64 = 4;
const TAG_MC: u64 = 5;

/// Materialize the fixed pool and test set of an experiment.
fn build_pool(cfg: &ExperimentConfig) -> Result<(Vec<Sample>, Vec<Sample>, usize, usize)> {
    match &cfg.dataset {
        DatasetSpec::Synthetic { num_classes, per_class, separation, noise, test_per_class } => {
            let all = data::make_synthetic_blobs(
                *num_classes,
                per_class + test_per_class,
                *separation,
                *noise,
                seed::derive(cfg.master_seed, TAG_DATA),
            )?;
            // The generator emits class-contiguous blocks; the first
            // `per_class` of each block form the pool, the rest the test set.
            let block = per_class + test_per_class;
            let mut pool = Vec::new();
            let mut test = Vec::new();
            for (i, s) in all.into_iter().enumerate() {
                if i % block < *per_class {
                    pool.push(s);
                } else {
                    test.push(s);
                }
            }
            Ok((pool, test, *num_classes, 2))
        }
        DatasetSpec::Files { train, test } => {
            let tr = data::load_libsvm(train, None)?;
            let te = data::load_libsvm(test, Some(tr.num_classes))?;
            if te.label_values != tr.label_values {
                return Err(Error::Data(
                    "train and test files use different label sets".into(),
                ));
            }
            let dim = tr.dimension.max(te.dimension);
            Ok((tr.samples, te.samples, tr.num_classes, dim))
        }
    }
}

/// Run the experiment protocol: the pool and test set stay fixed; each trial
/// resamples the labeled/unlabeled split, reclusters, and trains each method.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(ExperimentSummary, Vec<TrialResult>)> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    let (mut pool, mut test, num_classes, dimension) = build_pool(cfg)?;
    if cfg.normalize {
        pool = data::l2_normalize_samples(&pool)?;
        test = data::l2_normalize_samples(&test)?;
    }
    let g = cfg.num_clusters.unwrap_or(4 * num_classes);

    // One stability estimate per experiment, reused across trial bounds.
    let l_hat = if cfg.compute_bounds {
        let sample_size = pool.len() / 2;
        let eval_size = (pool.len() / 4).min(200).max(10);
        let clusterer = Clusterer::kmeans(g, seed::derive(cfg.master_seed, TAG_LHAT));
        Some(clustering::estimate_bounded_difference(
            &clusterer,
            &pool,
            dimension,
            sample_size,
            eval_size,
            cfg.stability_trials,
            seed::derive(cfg.master_seed, TAG_LHAT),
        )?)
    } else {
        None
    };

    let mut results: Vec<TrialResult> = Vec::new();
    let mut violations = 0usize;
    let mut bound_checks = 0usize;
    for t in 0..cfg.trials {
        let trial_seed = seed::derive2(cfg.master_seed, TAG_SPLIT, t as u64);
        let spec = SplitSpec {
            labeled_fraction: cfg.labeled_fraction,
            per_class_minimum: cfg.per_class_minimum,
            seed: trial_seed,
        };
        let (labeled, unlabeled) = data::split(&pool, num_classes, &spec)
            .map_err(|e| Error::Data(format!("trial {t}: {e}")))?;
        let ds = Dataset::new(labeled, unlabeled, test.clone(), num_classes, dimension)?;

        let clusterer = Clusterer::kmeans(g, seed::derive2(cfg.master_seed, TAG_CLUSTER, t as u64));
        let partition = clusterer.fit(&ds.unlabeled, dimension)?;
        let conf = confident::identify(&partition, &ds.labeled, &ds.unlabeled, cfg.kappa, cfg.eta, num_classes)?;

        let train_cfg = TrainConfig {
            iterations: cfg.iterations,
            step_scale: cfg.step_scale,
            norm_budget: cfg.norm_budget,
            rho: cfg.rho,
            seed: trial_seed,
            ..TrainConfig::default()
        };

        for &method in &cfg.methods {
            let (model, ctx) = match method {
                Method::Sup => {
                    let ctx = ClusterContext::supervised(ds.n(), ds.u());
                    (trainer::fit_supervised(&ds, &train_cfg)?, ctx)
                }
                Method::Pms2l => {
                    let ctx = ClusterContext::new(&partition, &conf, &ds.labeled, &ds.unlabeled, num_classes)?;
                    (trainer::fit(&ds, &partition, &conf, &train_cfg)?, ctx)
                }
            };
            let acc = accuracy(&model, &ds.test)?;
            let risk = penalized_risk(&model, &ds.labeled, &ds.unlabeled, &ctx, cfg.rho)?;

            let bound_total = match (method, l_hat) {
                (Method::Pms2l, Some(l)) => {
                    let rad = trial_rademacher(&ds, &ctx, &conf, cfg, t)?;
                    let params = BoundParams {
                        n: ds.n(),
                        u: ds.u(),
                        num_clusters: g,
                        num_classes,
                        kappa: cfg.kappa,
                        rho: cfg.rho,
                        delta: cfg.delta,
                        l_hat: l,
                        n_eta: conf.n_eta,
                        u_eta: conf.u_eta,
                        feature_radius: ds.feature_radius,
                        norm_budget: cfg.norm_budget,
                    };
                    let report = bounds::theorem3_bound(&risk, &rad, &params)?;
                    bound_checks += 1;
                    if 1.0 - acc > report.total {
                        violations += 1;
                    }
                    Some(report.total)
                }
                _ => None,
            };
            results.push(TrialResult {
                method,
                trial_seed,
                test_accuracy: acc,
                bound_total,
                empirical_risk: risk.total,
            });
        }
    }

    let mut per_method = BTreeMap::new();
    for &method in &cfg.methods {
        let accs: Vec<f64> = results
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.test_accuracy)
            .collect();
        per_method.insert(method.name().to_string(), stats(&accs));
    }
    let p_value = if cfg.methods.contains(&Method::Sup) && cfg.methods.contains(&Method::Pms2l) {
        let a: Vec<f64> = results
            .iter()
            .filter(|r| r.method == Method::Sup)
            .map(|r| r.test_accuracy)
            .collect();
        let b: Vec<f64> = results
            .iter()
            .filter(|r| r.method == Method::Pms2l)
            .map(|r| r.test_accuracy)
            .collect();
        if a.len() >= 4 && b.len() >= 4 {
            wilcoxon_rank_sum(&a, &b)?
        } else {
            // Too few trials for the normal approximation; report no evidence.
            1.0
        }
    } else {
        1.0
    };
    let bound_violation_rate = if bound_checks > 0 {
        Some(violations as f64 / bound_checks as f64)
    } else {
        None
    };
    Ok((
        ExperimentSummary { per_method, p_value, bound_violation_rate, l_hat },
        results,
    ))
}

/// Monte-Carlo Rademacher estimates for one trial's three sample groups.
fn trial_rademacher(
    ds: &Dataset,
    ctx: &ClusterContext,
    conf: &crate::confident::ConfidentClusterSet,
    cfg: &ExperimentConfig,
    trial: usize,
) -> Result<RademacherEstimates> {
    let confident_ids: std::collections::BTreeSet<usize> =
        conf.clusters.iter().map(|c| c.cluster_id).collect();
    let labeled_in: Vec<Sample> = ds
        .labeled
        .iter()
        .zip(ctx.labeled_assign.iter())
        .filter(|&(_, c)| confident_ids.contains(c))
        .map(|(s, _)| s.clone())
        .collect();
    let labeled_out: Vec<Sample> = ds
        .labeled
        .iter()
        .zip(ctx.labeled_assign.iter())
        .filter(|&(_, c)| !confident_ids.contains(c))
        .map(|(s, _)| s.clone())
        .collect();
    let unlabeled_in: Vec<Sample> = ds
        .unlabeled
        .iter()
        .zip(ctx.unlabeled_assign.iter())
        .filter(|&(_, c)| confident_ids.contains(c))
        .map(|(s, _)| s.clone())
        .collect();
    let b = cfg.norm_budget;
    let r = ds.feature_radius;
    let g = conf.num_clusters;
    let mc_seed = seed::derive2(cfg.master_seed, TAG_MC, trial as u64);
    Ok(RademacherEstimates {
        r_star_n: bounds::mc_rademacher_linear(&labeled_in, ds.n(), b, cfg.mc_draws, seed::derive(mc_seed, 1))?,
        r_star_u: bounds::mc_rademacher_linear(&unlabeled_in, ds.u(), b, cfg.mc_draws, seed::derive(mc_seed, 2))?,
        r_n: bounds::mc_rademacher_linear(&labeled_out, ds.n(), b, cfg.mc_draws, seed::derive(mc_seed, 3))?,
        mc_draws: cfg.mc_draws,
        closed_form_r_star_n: bounds::closed_form_rademacher(g, conf.n_eta, ds.n(), r, b),
        closed_form_r_star_u: bounds::closed_form_rademacher(g, conf.u_eta, ds.u(), r, b),
        closed_form_r_n: bounds::closed_form_rademacher(1, ds.n() - conf.n_eta, ds.n(), r, b),
    })
}

fn stats(values: &[f64]) -> MethodStats {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    MethodStats { mean_accuracy: mean, std_accuracy: std, trials: n }
}

/// One learning-curve row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction: f64,
    pub method: Method,
    pub mean: f64,
    pub std: f64,
}

/// Sweep the labeled fraction over a grid, running the full experiment at
/// each point.
pub fn learning_curve(cfg: &ExperimentConfig, fractions: &[f64]) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for &f in fractions {
        let point_cfg = ExperimentConfig { labeled_fraction: f, ..cfg.clone() };
        let (summary, _) = run_experiment(&point_cfg)?;
        for &method in &cfg.methods {
            let s = &summary.per_method[method.name()];
            out.push(CurvePoint { fraction: f, method, mean: s.mean_accuracy, std: s.std_accuracy });
        }
    }
    Ok(out)
}
