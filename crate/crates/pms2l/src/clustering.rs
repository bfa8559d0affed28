//! Clustering stage: seeded k-means, the minimal matching distance between
//! clusterings, and stability estimates for the clusterer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{dist2_to_center, sample_indices_sorted, Sample};
use crate::hungarian;
use crate::seed;
use crate::{Error, Result};

/// A clustering of a point set: cluster ids plus (for centroid methods) the
/// centers that let the partition assign arbitrary new points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    #[serde(rename = "G")]
    pub num_clusters: usize,
    pub assign: Vec<usize>,
    pub centers: Option<Vec<Vec<f64>>>,
}

/// Clustering algorithm configuration. k-means is the only built-in method;
/// the enum leaves room for alternatives behind the same interface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Clusterer {
    pub method: ClusterMethod,
    pub num_clusters: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterMethod {
    KMeans,
}

impl Clusterer {
    pub fn kmeans(num_clusters: usize, seed: u64) -> Self {
        Clusterer {
            method: ClusterMethod::KMeans,
            num_clusters,
            max_iters: 100,
            tolerance: 1e-6,
            seed,
        }
    }

    pub fn fit(&self, points: &[Sample], dimension: usize) -> Result<Partition> {
        match self.method {
            ClusterMethod::KMeans => fit_kmeans(points, dimension, self),
        }
    }
}

/// Stability quantities of a clusterer around a reference partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityEstimate {
    /// Estimated bounded-difference constant (sample_size x mean distance
    /// under one-point swaps).
    pub l_hat: f64,
    /// Mean minimal matching distance to the full-pool reference fit.
    pub delta_hat: f64,
    pub trials: usize,
    #[serde(skip)]
    pub reference: Option<Partition>,
}

/// Lloyd's algorithm from a k-means++ initialization, deterministic per seed.
///
/// Empty clusters are repaired by reassigning the point farthest from its
/// current center, so the output has no empty cluster.
pub fn fit_kmeans(points: &[Sample], dimension: usize, cfg: &Clusterer) -> Result<Partition> {
    let g = cfg.num_clusters;
    let m = points.len();
    if g < 1 {
        return Err(Error::Config("need at least one cluster".into()));
    }
    if m < g {
        return Err(Error::Config(format!(
            "cannot fit {g} clusters to {m} points"
        )));
    }
    let mut rng = seed::rng(cfg.seed);
    let dense: Vec<Vec<f64>> = points.iter().map(|s| s.to_dense(dimension)).collect();

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(g);
    let first = rng.gen_range(0..m);
    centers.push(dense[first].clone());
    let mut d2: Vec<f64> = dense.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < g {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let r = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut chosen = m - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if r < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..m)
        };
        centers.push(dense[next].clone());
        for (i, x) in dense.iter().enumerate() {
            let d = sq_dist(x, centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    let mut assign = vec![0usize; m];
    for _ in 0..cfg.max_iters {
        // Assignment step (ties -> lowest cluster id via strict improvement).
        let mut point_dist = vec![0.0f64; m];
        for (i, x) in dense.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = sq_dist(x, &centers[0]);
            for (c, center) in centers.iter().enumerate().skip(1) {
                let d = sq_dist(x, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = best;
            point_dist[i] = best_d;
        }

        // Update step with empty-cluster repair.
        let mut counts = vec![0usize; g];
        for &a in &assign {
            counts[a] += 1;
        }
        for c in 0..g {
            if counts[c] == 0 {
                let far = (0..m)
                    .max_by(|&a, &b| point_dist[a].partial_cmp(&point_dist[b]).unwrap())
                    .unwrap();
                counts[assign[far]] -= 1;
                assign[far] = c;
                counts[c] = 1;
                point_dist[far] = 0.0;
            }
        }
        let mut new_centers = vec![vec![0.0f64; dimension]; g];
        for (i, x) in dense.iter().enumerate() {
            let row = &mut new_centers[assign[i]];
            for (r, &xv) in row.iter_mut().zip(x.iter()) {
                *r += xv;
            }
        }
        for c in 0..g {
            let inv = 1.0 / counts[c] as f64;
            for v in &mut new_centers[c] {
                *v *= inv;
            }
        }

        let movement = centers
            .iter()
            .zip(new_centers.iter())
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centers = new_centers;
        if movement < cfg.tolerance {
            break;
        }
    }

    // Final assignment against the converged centers.
    for (i, x) in dense.iter().enumerate() {
        assign[i] = nearest_center(x, &centers);
    }
    repair_empty(&mut assign, &mut centers, &dense, g);

    Ok(Partition { num_clusters: g, assign, centers: Some(centers) })
}

fn repair_empty(assign: &mut [usize], centers: &mut [Vec<f64>], dense: &[Vec<f64>], g: usize) {
    let mut counts = vec![0usize; g];
    for &a in assign.iter() {
        counts[a] += 1;
    }
    for c in 0..g {
        if counts[c] == 0 {
            let far = (0..dense.len())
                .max_by(|&a, &b| {
                    let da = sq_dist(&dense[a], &centers[assign[a]]);
                    let db = sq_dist(&dense[b], &centers[assign[b]]);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            counts[assign[far]] -= 1;
            assign[far] = c;
            counts[c] = 1;
            centers[c] = dense[far].clone();
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(x: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0usize;
    let mut best_d = sq_dist(x, &centers[0]);
    for (c, center) in centers.iter().enumerate().skip(1) {
        let d = sq_dist(x, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Assign a sample to its nearest center (ties -> lowest cluster id).
pub fn assign(partition: &Partition, x: &Sample) -> Result<usize> {
    let centers = partition
        .centers
        .as_ref()
        .ok_or_else(|| Error::Argument("partition has no centers; cannot assign new points".into()))?;
    let mut best = 0usize;
    let mut best_d = dist2_to_center(x, &centers[0]);
    for (c, center) in centers.iter().enumerate().skip(1) {
        let d = dist2_to_center(x, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    Ok(best)
}

/// Assign every sample of a slice.
pub fn assign_all(partition: &Partition, xs: &[Sample]) -> Result<Vec<usize>> {
    xs.iter().map(|x| assign(partition, x)).collect()
}

/// Minimal matching distance between two cluster-id sequences over the same
/// point set: 1 - (best agreement under cluster relabeling)/n, computed
/// exactly via the assignment problem on the GxG agreement matrix.
pub fn minimal_matching_distance_ids(a: &[usize], b: &[usize], num_clusters: usize) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Argument("empty evaluation set".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Argument("assignment vectors differ in length".into()));
    }
    let g = num_clusters
        .max(a.iter().copied().max().map_or(0, |m| m + 1))
        .max(b.iter().copied().max().map_or(0, |m| m + 1));
    let mut agreement = vec![vec![0i64; g]; g];
    for (&ca, &cb) in a.iter().zip(b.iter()) {
        agreement[ca][cb] += 1;
    }
    let (_, best) = hungarian::solve_max(&agreement);
    Ok(1.0 - best as f64 / a.len() as f64)
}

/// Minimal matching distance between two partitions evaluated on a point set,
/// assigning each point through the partitions' centers. Partitions with
/// different G are padded with empty clusters.
pub fn minimal_matching_distance(
    a: &Partition,
    b: &Partition,
    eval_set: &[Sample],
) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(Error::Argument("empty evaluation set".into()));
    }
    let ids_a = assign_all(a, eval_set)?;
    let ids_b = assign_all(b, eval_set)?;
    let g = a.num_clusters.max(b.num_clusters);
    minimal_matching_distance_ids(&ids_a, &ids_b, g)
}

/// Brute-force oracle for the minimal matching distance (G <= 6 in tests).
pub fn minimal_matching_distance_brute(a: &[usize], b: &[usize], num_clusters: usize) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::Argument("empty evaluation set".into()));
    }
    let g = num_clusters
        .max(a.iter().copied().max().map_or(0, |m| m + 1))
        .max(b.iter().copied().max().map_or(0, |m| m + 1));
    let mut agreement = vec![vec![0i64; g]; g];
    for (&ca, &cb) in a.iter().zip(b.iter()) {
        agreement[ca][cb] += 1;
    }
    let best = hungarian::brute_force_max(&agreement);
    Ok(1.0 - best as f64 / a.len() as f64)
}

/// Estimate the bounded-difference constant L: fit the clusterer on a sample
/// Z and on Z' differing in exactly one point, measure the minimal matching
/// distance on a fresh evaluation set, and scale the mean by the sample size.
pub fn estimate_bounded_difference(
    cfg: &Clusterer,
    pool: &[Sample],
    dimension: usize,
    sample_size: usize,
    eval_size: usize,
    trials: usize,
    seed_value: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Argument("trials must be >= 1".into()));
    }
    if pool.len() < sample_size + eval_size + 1 {
        return Err(Error::Argument(format!(
            "pool of {} too small for sample_size {} + eval_size {} + 1",
            pool.len(),
            sample_size,
            eval_size
        )));
    }
    let mut total = 0.0;
    for t in 0..trials {
        let mut rng = seed::rng(seed::derive2(seed_value, 0xBD, t as u64));
        let mut perm: Vec<usize> = (0..pool.len()).collect();
        for i in 0..(sample_size + eval_size + 1) {
            let j = rng.gen_range(i..pool.len());
            perm.swap(i, j);
        }
        let mut z_idx = perm[..sample_size].to_vec();
        z_idx.sort_unstable();
        let fresh = perm[sample_size];
        let eval_idx = &perm[sample_size + 1..sample_size + 1 + eval_size];

        let z: Vec<Sample> = z_idx.iter().map(|&i| pool[i].clone()).collect();
        let mut z_prime = z.clone();
        let swap_pos = rng.gen_range(0..sample_size);
        z_prime[swap_pos] = pool[fresh].clone();
        let eval_set: Vec<Sample> = eval_idx.iter().map(|&i| pool[i].clone()).collect();

        let pa = cfg.fit(&z, dimension)?;
        let pb = cfg.fit(&z_prime, dimension)?;
        total += minimal_matching_distance(&pa, &pb, &eval_set)?;
    }
    Ok(sample_size as f64 * total / trials as f64)
}

/// Estimate stability: distance of fits on random subsamples to the fit on
/// the entire pool (the computable proxy for the limit clustering).
pub fn estimate_stability(
    cfg: &Clusterer,
    pool: &[Sample],
    dimension: usize,
    sample_size: usize,
    eval_set: &[Sample],
    trials: usize,
    seed_value: u64,
) -> Result<StabilityEstimate> {
    if trials == 0 {
        return Err(Error::Argument("trials must be >= 1".into()));
    }
    if sample_size > pool.len() {
        return Err(Error::Argument("sample_size exceeds pool".into()));
    }
    if eval_set.is_empty() {
        return Err(Error::Argument("empty evaluation set".into()));
    }
    let reference = cfg.fit(pool, dimension)?;
    let mut total = 0.0;
    for t in 0..trials {
        let mut rng = seed::rng(seed::derive2(seed_value, 0x57AB, t as u64));
        let z_idx = sample_indices_sorted(&mut rng, pool.len(), sample_size);
        let z: Vec<Sample> = z_idx.iter().map(|&i| pool[i].clone()).collect();
        let p = cfg.fit(&z, dimension)?;
        total += minimal_matching_distance(&p, &reference, eval_set)?;
    }
    Ok(StabilityEstimate {
        l_hat: 0.0,
        delta_hat: total / trials as f64,
        trials,
        reference: Some(reference),
    })
}

/// Within-cluster sum of squares of a partition over its fitted points.
pub fn wcss(points: &[Sample], dimension: usize, partition: &Partition) -> f64 {
    let centers = partition.centers.as_ref().expect("centroid partition");
    points
        .iter()
        .zip(partition.assign.iter())
        .map(|(x, &a)| {
            let dense = x.to_dense(dimension);
            sq_dist(&dense, &centers[a])
        })
        .sum()
}
