//! Projected subgradient training of the norm-constrained linear multiclass
//! model on the penalized objective.

use serde::{Deserialize, Serialize};

use crate::clustering::Partition;
use crate::confident::ConfidentClusterSet;
use crate::data::{Dataset, Sample};
use crate::objective::{penalized_risk, subgradient, ClusterContext};
use crate::{Error, Result};

/// Linear multiclass hypothesis: scores are h(x,y) = w_y . x with the group
/// norm ||W||_F constrained to the budget B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    #[serde(rename = "K")]
    pub num_classes: usize,
    #[serde(rename = "d")]
    pub dimension: usize,
    #[serde(rename = "B")]
    pub norm_budget: f64,
    pub rho: f64,
    /// Row-major K x d weight matrix.
    pub weights: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(num_classes: usize, dimension: usize, norm_budget: f64, rho: f64) -> Self {
        LinearModel {
            num_classes,
            dimension,
            norm_budget,
            rho,
            weights: vec![0.0; num_classes * dimension],
        }
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.weights[y * self.dimension..(y + 1) * self.dimension]
    }

    /// Group (Frobenius) norm of the weight matrix.
    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Fill `out` with the K class scores of a sample.
    pub fn scores_into(&self, x: &Sample, out: &mut [f64]) {
        for (y, slot) in out.iter_mut().enumerate() {
            *slot = x.dot(self.row(y));
        }
    }

    pub fn scores(&self, x: &Sample) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes];
        self.scores_into(x, &mut out);
        out
    }
}

/// Predicted class: argmax of the scores, ties to the lowest class index.
pub fn predict(model: &LinearModel, x: &Sample) -> usize {
    let mut best = 0usize;
    let mut best_s = x.dot(model.row(0));
    for y in 1..model.num_classes {
        let s = x.dot(model.row(y));
        if s > best_s {
            best_s = s;
            best = y;
        }
    }
    best
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of subgradient steps T.
    pub iterations: usize,
    /// Step size is step_scale / sqrt(t).
    pub step_scale: f64,
    /// Group-norm budget B.
    pub norm_budget: f64,
    pub rho: f64,
    pub seed: u64,
    pub cv_folds: usize,
    /// Candidate budgets for cross-validated selection.
    pub b_grid: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 500,
            step_scale: 1.0,
            norm_budget: 10.0,
            rho: 1.0,
            seed: 0,
            cv_folds: 5,
            b_grid: default_b_grid(),
        }
    }
}

/// 9 logarithmically spaced budgets in [1e-2, 1e2].
pub fn default_b_grid() -> Vec<f64> {
    (0..9).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect()
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.step_scale <= 0.0 {
            return Err(Error::Config("step_scale must be positive".into()));
        }
        if self.norm_budget <= 0.0 {
            return Err(Error::Config("norm budget must be positive".into()));
        }
        if self.rho <= 0.0 {
            return Err(Error::Config("rho must be positive".into()));
        }
        Ok(())
    }
}

/// Projected subgradient descent on the penalized risk.
///
/// Starts from W = 0, steps by step_scale/sqrt(t), rescales onto the ball
/// ||W|| <= B after every step, and returns the recorded iterate with the
/// lowest penalized risk (the trajectory need not be monotone because the
/// penalty is nonconvex).
pub fn fit(
    data: &Dataset,
    partition: &Partition,
    confident: &ConfidentClusterSet,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    let ctx = ClusterContext::new(
        partition,
        confident,
        &data.labeled,
        &data.unlabeled,
        data.num_classes,
    )?;
    fit_with_context(data, &ctx, cfg)
}

/// Supervised baseline: the same optimizer with the penalty disabled.
pub fn fit_supervised(data: &Dataset, cfg: &TrainConfig) -> Result<LinearModel> {
    let ctx = ClusterContext::supervised(data.n(), data.u());
    fit_with_context(data, &ctx, cfg)
}

/// Shared training loop over a prebuilt cluster context.
pub fn fit_with_context(data: &Dataset, ctx: &ClusterContext, cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    fit_sets(&data.labeled, &data.unlabeled, data.num_classes, data.dimension, ctx, cfg)
}

fn fit_sets(
    labeled: &[Sample],
    unlabeled: &[Sample],
    num_classes: usize,
    dimension: usize,
    ctx: &ClusterContext,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    let mut model = LinearModel::zeros(num_classes, dimension, cfg.norm_budget, cfg.rho);
    let mut best_risk = f64::INFINITY;
    let mut best_weights = model.weights.clone();

    for t in 1..=cfg.iterations {
        let grad = subgradient(&model, labeled, unlabeled, ctx, cfg.rho)?;
        let step = cfg.step_scale / (t as f64).sqrt();
        for (w, g) in model.weights.iter_mut().zip(grad.iter()) {
            *w -= step * g;
        }
        let norm = model.norm();
        if norm > cfg.norm_budget {
            let scale = cfg.norm_budget / norm;
            for w in &mut model.weights {
                *w *= scale;
            }
        }
        let risk = penalized_risk(&model, labeled, unlabeled, ctx, cfg.rho)?;
        if risk.total < best_risk {
            best_risk = risk.total;
            best_weights.copy_from_slice(&model.weights);
        }
    }
    model.weights = best_weights;
    Ok(model)
}

/// Pick the norm budget by stratified cross-validation over the labeled set.
///
/// Each grid candidate is trained on the fold-complement labeled data plus
/// the full penalty term and scored on the held-out labeled fold; the budget
/// with the highest mean validation accuracy wins, ties to the smaller B.
pub fn select_budget(
    data: &Dataset,
    partition: &Partition,
    confident: &ConfidentClusterSet,
    cfg: &TrainConfig,
) -> Result<f64> {
    cfg.validate()?;
    if cfg.b_grid.is_empty() {
        return Err(Error::Config("empty budget grid".into()));
    }
    let folds = cfg.cv_folds;
    if folds < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    let mut grid: Vec<f64> = cfg.b_grid.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    if grid.len() == 1 {
        return Ok(grid[0]);
    }

    // Stratified folds: walk each class's examples in pool order, dealing
    // them round-robin across folds.
    let mut fold_of = vec![0usize; data.n()];
    let mut next_fold = vec![0usize; data.num_classes];
    for (i, s) in data.labeled.iter().enumerate() {
        let y = s.label.expect("labeled sample");
        fold_of[i] = next_fold[y];
        next_fold[y] = (next_fold[y] + 1) % folds;
    }
    let mut per_class = vec![0usize; data.num_classes];
    for s in &data.labeled {
        per_class[s.label.unwrap()] += 1;
    }
    if per_class.iter().any(|&c| c < folds) {
        return Err(Error::Config(format!(
            "every class needs at least {folds} labeled examples for {folds}-fold selection"
        )));
    }

    let mut best_b = grid[0];
    let mut best_acc = f64::NEG_INFINITY;
    for &b in &grid {
        let mut correct = 0usize;
        let mut total = 0usize;
        for f in 0..folds {
            let train: Vec<Sample> = data
                .labeled
                .iter()
                .zip(fold_of.iter())
                .filter(|&(_, &ff)| ff != f)
                .map(|(s, _)| s.clone())
                .collect();
            let ctx = ClusterContext::new(partition, confident, &train, &data.unlabeled, data.num_classes)?;
            let fold_cfg = TrainConfig { norm_budget: b, ..cfg.clone() };
            let model = fit_sets(&train, &data.unlabeled, data.num_classes, data.dimension, &ctx, &fold_cfg)?;
            for (s, _) in data.labeled.iter().zip(fold_of.iter()).filter(|&(_, &ff)| ff == f) {
                if predict(&model, s) == s.label.unwrap() {
                    correct += 1;
                }
                total += 1;
            }
        }
        let acc = correct as f64 / total as f64;
        if acc > best_acc {
            best_acc = acc;
            best_b = b;
        }
    }
    Ok(best_b)
}
