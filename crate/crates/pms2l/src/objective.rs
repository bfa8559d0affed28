//! Margins, the rho-margin loss, the penalized empirical risk, and its
//! subgradient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clustering::{assign_all, Partition};
use crate::confident::ConfidentClusterSet;
use crate::data::Sample;
use crate::trainer::LinearModel;
use crate::{Error, Result};

/// Breakdown of the penalized empirical risk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskBreakdown {
    /// Mean rho-margin loss over the labeled sample.
    pub labeled_term: f64,
    /// Cluster penalty: mean (over u) rho-margin loss of the unlabeled
    /// margins inside confident clusters.
    pub penalty_term: f64,
    /// labeled_term + penalty_term.
    pub total: f64,
    /// Per confident cluster: labeled part (over n) + unlabeled part (over u).
    pub per_cluster: BTreeMap<usize, f64>,
}

/// Margin of class `y` under a score vector: s[y] - max_{y' != y} s[y'].
pub fn margin(scores: &[f64], y: usize) -> Result<f64> {
    let k = scores.len();
    if k < 2 {
        return Err(Error::Argument("need at least 2 classes".into()));
    }
    if y >= k {
        return Err(Error::Argument(format!("class {y} out of range (K={k})")));
    }
    let mut best = f64::NEG_INFINITY;
    for (c, &s) in scores.iter().enumerate() {
        if c != y && s > best {
            best = s;
        }
    }
    Ok(scores[y] - best)
}

/// Competing argmax: argmax_{y' != y} s[y'], ties to the lowest index.
pub fn competing_argmax(scores: &[f64], y: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_s = f64::NEG_INFINITY;
    for (c, &s) in scores.iter().enumerate() {
        if c != y && s > best_s {
            best_s = s;
            best = c;
        }
    }
    best
}

/// Margin of an unlabeled example against a predominant set: the best score
/// inside Y_kappa minus the best score outside it.
pub fn unlabeled_margin(scores: &[f64], predominant: &[usize]) -> Result<f64> {
    let k = scores.len();
    if predominant.is_empty() || predominant.len() >= k {
        return Err(Error::Argument(
            "predominant set must be nonempty and a strict subset of the classes".into(),
        ));
    }
    let mut inside = vec![false; k];
    for &c in predominant {
        if c >= k {
            return Err(Error::Argument(format!("class {c} out of range (K={k})")));
        }
        inside[c] = true;
    }
    let mut max_in = f64::NEG_INFINITY;
    let mut max_out = f64::NEG_INFINITY;
    for (c, &s) in scores.iter().enumerate() {
        if inside[c] {
            if s > max_in {
                max_in = s;
            }
        } else if s > max_out {
            max_out = s;
        }
    }
    Ok(max_in - max_out)
}

/// The rho-margin loss: 1 below zero, linear ramp on (0, rho), 0 above rho.
pub fn phi_rho(z: f64, rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(Error::Argument(format!("rho must be positive, got {rho}")));
    }
    Ok(if z >= rho {
        0.0
    } else if z <= 0.0 {
        1.0
    } else {
        1.0 - z / rho
    })
}

/// Precomputed cluster structure shared by risk and subgradient evaluations:
/// cluster assignments for both sample stores and, per confident cluster, the
/// class indices inside and outside its predominant set.
#[derive(Debug, Clone)]
pub struct ClusterContext {
    pub labeled_assign: Vec<usize>,
    pub unlabeled_assign: Vec<usize>,
    /// Indexed by cluster id; `Some((in_classes, out_classes))` iff confident.
    split_classes: Vec<Option<(Vec<usize>, Vec<usize>)>>,
}

impl ClusterContext {
    pub fn new(
        partition: &Partition,
        confident: &ConfidentClusterSet,
        labeled: &[Sample],
        unlabeled: &[Sample],
        num_classes: usize,
    ) -> Result<Self> {
        let labeled_assign = assign_all(partition, labeled)?;
        let unlabeled_assign = assign_all(partition, unlabeled)?;
        let mut split_classes = vec![None; partition.num_clusters];
        for c in &confident.clusters {
            let mut inside = vec![false; num_classes];
            for &y in &c.predominant {
                inside[y] = true;
            }
            let in_classes: Vec<usize> = (0..num_classes).filter(|&y| inside[y]).collect();
            let out_classes: Vec<usize> = (0..num_classes).filter(|&y| !inside[y]).collect();
            if c.cluster_id >= split_classes.len() {
                return Err(Error::Argument(format!(
                    "confident cluster id {} outside partition (G={})",
                    c.cluster_id, partition.num_clusters
                )));
            }
            split_classes[c.cluster_id] = Some((in_classes, out_classes));
        }
        Ok(ClusterContext { labeled_assign, unlabeled_assign, split_classes })
    }

    /// Context with no confident clusters (supervised-only training).
    pub fn supervised(n: usize, u: usize) -> Self {
        ClusterContext {
            labeled_assign: vec![0; n],
            unlabeled_assign: vec![0; u],
            split_classes: Vec::new(),
        }
    }

    fn confident_split(&self, cluster: usize) -> Option<&(Vec<usize>, Vec<usize>)> {
        self.split_classes.get(cluster).and_then(|o| o.as_ref())
    }
}

/// The penalized empirical risk of a model, with per-cluster diagnostics.
pub fn penalized_risk(
    model: &LinearModel,
    labeled: &[Sample],
    unlabeled: &[Sample],
    ctx: &ClusterContext,
    rho: f64,
) -> Result<RiskBreakdown> {
    if labeled.is_empty() {
        return Err(Error::Argument("empty labeled set".into()));
    }
    if rho <= 0.0 {
        return Err(Error::Argument(format!("rho must be positive, got {rho}")));
    }
    let n = labeled.len() as f64;
    let u = unlabeled.len() as f64;

    let mut labeled_sum = 0.0;
    let mut per_cluster: BTreeMap<usize, f64> = BTreeMap::new();
    let mut scores = vec![0.0f64; model.num_classes];
    for (i, s) in labeled.iter().enumerate() {
        model.scores_into(s, &mut scores);
        let y = s.label.ok_or_else(|| Error::Argument("unlabeled sample in labeled set".into()))?;
        let loss = phi_rho(margin(&scores, y)?, rho)?;
        labeled_sum += loss;
        let cluster = ctx.labeled_assign[i];
        if ctx.confident_split(cluster).is_some() {
            *per_cluster.entry(cluster).or_insert(0.0) += loss / n;
        }
    }

    let mut penalty_sum = 0.0;
    if u > 0.0 {
        for (i, s) in unlabeled.iter().enumerate() {
            let cluster = ctx.unlabeled_assign[i];
            if let Some((in_classes, out_classes)) = ctx.confident_split(cluster) {
                model.scores_into(s, &mut scores);
                let m = max_over(&scores, in_classes) - max_over(&scores, out_classes);
                let loss = phi_rho(m, rho)?;
                penalty_sum += loss;
                *per_cluster.entry(cluster).or_insert(0.0) += loss / u;
            }
        }
    }

    let labeled_term = labeled_sum / n;
    let penalty_term = if u > 0.0 { penalty_sum / u } else { 0.0 };
    Ok(RiskBreakdown {
        labeled_term,
        penalty_term,
        total: labeled_term + penalty_term,
        per_cluster,
    })
}

/// Subgradient of the penalized risk as a row-major K x d matrix.
///
/// A labeled example contributes on the active band 0 <= m <= rho (kinks use
/// the middle-branch derivative); likewise for penalized unlabeled examples.
pub fn subgradient(
    model: &LinearModel,
    labeled: &[Sample],
    unlabeled: &[Sample],
    ctx: &ClusterContext,
    rho: f64,
) -> Result<Vec<f64>> {
    if labeled.is_empty() {
        return Err(Error::Argument("empty labeled set".into()));
    }
    if rho <= 0.0 {
        return Err(Error::Argument(format!("rho must be positive, got {rho}")));
    }
    let k = model.num_classes;
    let d = model.dimension;
    let n = labeled.len() as f64;
    let u = unlabeled.len() as f64;
    let mut grad = vec![0.0f64; k * d];
    let mut scores = vec![0.0f64; k];

    let scale_l = 1.0 / (n * rho);
    for s in labeled.iter() {
        model.scores_into(s, &mut scores);
        let y = s.label.ok_or_else(|| Error::Argument("unlabeled sample in labeled set".into()))?;
        let m = margin(&scores, y)?;
        if (0.0..=rho).contains(&m) {
            let y_star = competing_argmax(&scores, y);
            scatter(&mut grad, d, y_star, s, scale_l);
            scatter(&mut grad, d, y, s, -scale_l);
        }
    }

    if u > 0.0 {
        let scale_u = 1.0 / (u * rho);
        for (i, s) in unlabeled.iter().enumerate() {
            let cluster = ctx.unlabeled_assign[i];
            if let Some((in_classes, out_classes)) = ctx.confident_split(cluster) {
                model.scores_into(s, &mut scores);
                let y_plus = argmax_over(&scores, in_classes);
                let y_minus = argmax_over(&scores, out_classes);
                let m = scores[y_plus] - scores[y_minus];
                if (0.0..=rho).contains(&m) {
                    scatter(&mut grad, d, y_minus, s, scale_u);
                    scatter(&mut grad, d, y_plus, s, -scale_u);
                }
            }
        }
    }
    Ok(grad)
}

fn scatter(grad: &mut [f64], d: usize, row: usize, s: &Sample, scale: f64) {
    let base = row * d;
    for &(j, v) in &s.features {
        let j = j as usize;
        if j < d {
            grad[base + j] += scale * v;
        }
    }
}

fn max_over(scores: &[f64], classes: &[usize]) -> f64 {
    classes
        .iter()
        .map(|&c| scores[c])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Argmax over a class subset, ties to the lowest class index (the subsets
/// are stored in ascending index order, so strict improvement suffices).
fn argmax_over(scores: &[f64], classes: &[usize]) -> usize {
    let mut best = classes[0];
    let mut best_s = scores[best];
    for &c in &classes[1..] {
        if scores[c] > best_s {
            best_s = scores[c];
            best = c;
        }
    }
    best
}
