//! Data loading, normalization, splitting, and synthetic data generation.
//!
//! Samples are stored sparsely as sorted `(index, value)` pairs; labels are
//! contiguous 0-based class indices regardless of how the source file encodes
//! them. All randomized operations are pure functions of an explicit seed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// One example: a sparse feature vector and an optional class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Sorted, strictly increasing (dimension index, value) pairs.
    pub features: Vec<(u32, f64)>,
    /// 0-based class index; `None` for unlabeled samples.
    pub label: Option<usize>,
}

impl Sample {
    pub fn new(features: Vec<(u32, f64)>, label: Option<usize>) -> Self {
        Sample { features, label }
    }

    /// Euclidean norm of the feature vector.
    pub fn norm(&self) -> f64 {
        self.features
            .iter()
            .map(|&(_, v)| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Dot product with a dense vector; indices beyond its length contribute 0.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(i, v) in &self.features {
            if let Some(w) = dense.get(i as usize) {
                acc += v * w;
            }
        }
        acc
    }

    /// Dense copy of the first `dim` coordinates.
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for &(i, v) in &self.features {
            if (i as usize) < dim {
                out[i as usize] = v;
            }
        }
        out
    }
}

/// Squared Euclidean distance between a sparse sample and a dense center.
pub fn dist2_to_center(sample: &Sample, center: &[f64]) -> f64 {
    // ||x - c||^2 = ||c||^2 - 2 x.c + ||x||^2, but computed directly for
    // numerical clarity: walk the dense center and patch in sparse entries.
    let mut acc: f64 = center.iter().map(|c| c * c).sum();
    for &(i, v) in &sample.features {
        let c = center.get(i as usize).copied().unwrap_or(0.0);
        acc -= c * c;
        acc += (v - c) * (v - c);
    }
    acc.max(0.0)
}

/// A parsed file: samples with remapped labels plus inferred shape.
#[derive(Debug, Clone)]
pub struct DataFragment {
    pub samples: Vec<Sample>,
    pub num_classes: usize,
    pub dimension: usize,
    /// Original file labels in ascending order; `labels[i]` maps to class `i`.
    pub label_values: Vec<i64>,
}

/// The assembled dataset: labeled + unlabeled training data and a test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub labeled: Vec<Sample>,
    pub unlabeled: Vec<Sample>,
    pub test: Vec<Sample>,
    pub num_classes: usize,
    pub dimension: usize,
    /// R: the largest Euclidean norm over all training samples.
    pub feature_radius: f64,
}

impl Dataset {
    /// Assemble a dataset, validating the label placement invariants.
    pub fn new(
        labeled: Vec<Sample>,
        unlabeled: Vec<Sample>,
        test: Vec<Sample>,
        num_classes: usize,
        dimension: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Data(format!("need K >= 2 classes, got {num_classes}")));
        }
        if labeled.is_empty() {
            return Err(Error::Data("labeled set is empty".into()));
        }
        for (i, s) in labeled.iter().chain(test.iter()).enumerate() {
            match s.label {
                None => return Err(Error::Data(format!("sample {i} in a labeled store has no label"))),
                Some(y) if y >= num_classes => {
                    return Err(Error::Data(format!("label {y} out of range (K={num_classes})")))
                }
                _ => {}
            }
        }
        if unlabeled.iter().any(|s| s.label.is_some()) {
            return Err(Error::Data("unlabeled store contains a labeled sample".into()));
        }
        let feature_radius = labeled
            .iter()
            .chain(unlabeled.iter())
            .map(Sample::norm)
            .fold(0.0_f64, f64::max);
        Ok(Dataset { labeled, unlabeled, test, num_classes, dimension, feature_radius })
    }

    pub fn n(&self) -> usize {
        self.labeled.len()
    }

    pub fn u(&self) -> usize {
        self.unlabeled.len()
    }
}

/// Parameters of a labeled/unlabeled split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub labeled_fraction: f64,
    pub per_class_minimum: usize,
    pub seed: u64,
}

/// Parse a LIBSVM-format file: `label idx:val idx:val ...` with 1-based,
/// strictly increasing indices. Labels are remapped to 0..K-1 by ascending
/// original value; unsorted or duplicate indices are rejected.
pub fn load_libsvm(path: &Path, num_classes: Option<usize>) -> Result<DataFragment> {
    let file = File::open(path).map_err(|e| {
        Error::Data(format!("cannot open {}: {e}", path.display()))
    })?;
    let reader = BufReader::new(file);

    let mut raw: Vec<(i64, Vec<(u32, f64)>)> = Vec::new();
    let mut dimension = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_tok = parts.next().unwrap();
        let label: i64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            msg: format!("bad label '{label_tok}'"),
        })?;
        let mut feats: Vec<(u32, f64)> = Vec::new();
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: format!("expected idx:val, got '{tok}'"),
            })?;
            let idx: u32 = idx_s.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad feature index '{idx_s}'"),
            })?;
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad feature value '{val_s}'"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "feature indices are 1-based; got 0".into(),
                });
            }
            if !val.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite value at line {}",
                    lineno + 1
                )));
            }
            if let Some(&(prev, _)) = feats.last() {
                if idx - 1 <= prev {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("feature indices not strictly increasing at '{tok}'"),
                    });
                }
            }
            feats.push((idx - 1, val));
            dimension = dimension.max(idx as usize);
        }
        raw.push((label, feats));
    }

    let mut label_values: Vec<i64> = raw.iter().map(|(l, _)| *l).collect();
    label_values.sort_unstable();
    label_values.dedup();
    if let Some(k) = num_classes {
        if label_values.len() > k {
            return Err(Error::Data(format!(
                "file has {} distinct labels but num_classes={k}",
                label_values.len()
            )));
        }
    }
    let num_classes = num_classes.unwrap_or(label_values.len());
    let samples = raw
        .into_iter()
        .map(|(l, feats)| {
            let cls = label_values.binary_search(&l).unwrap();
            Sample::new(feats, Some(cls))
        })
        .collect();
    Ok(DataFragment { samples, num_classes, dimension, label_values })
}

/// Write samples in LIBSVM format (1-based indices). Labeled samples emit
/// their 0-based class index as the label; unlabeled samples emit label 0.
pub fn write_libsvm(path: &Path, samples: &[Sample]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for s in samples {
        let label = s.label.map(|y| y as i64).unwrap_or(0);
        write!(w, "{label}")?;
        for &(i, v) in &s.features {
            write!(w, " {}:{}", i + 1, v)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn normalize_one(store: &str, idx: usize, s: &Sample) -> Result<Sample> {
    let n = s.norm();
    if n == 0.0 {
        return Err(Error::Data(format!("zero-norm sample at index {idx} in {store} set")));
    }
    let features = s.features.iter().map(|&(i, v)| (i, v / n)).collect();
    Ok(Sample { features, label: s.label })
}

/// Scale every sample of a slice to unit Euclidean norm.
pub fn l2_normalize_samples(samples: &[Sample]) -> Result<Vec<Sample>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| normalize_one("sample", i, s))
        .collect()
}

/// Scale every sample of a dataset to unit Euclidean norm.
pub fn l2_normalize(ds: &Dataset) -> Result<Dataset> {
    let labeled = ds
        .labeled
        .iter()
        .enumerate()
        .map(|(i, s)| normalize_one("labeled", i, s))
        .collect::<Result<Vec<_>>>()?;
    let unlabeled = ds
        .unlabeled
        .iter()
        .enumerate()
        .map(|(i, s)| normalize_one("unlabeled", i, s))
        .collect::<Result<Vec<_>>>()?;
    let test = ds
        .test
        .iter()
        .enumerate()
        .map(|(i, s)| normalize_one("test", i, s))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Dataset::new(labeled, unlabeled, test, ds.num_classes, ds.dimension)?;
    // By construction every training norm is 1; pin R exactly.
    out.feature_radius = 1.0;
    Ok(out)
}

/// Draw `m` distinct indices from `0..n` (partial Fisher-Yates), returned in
/// ascending order so that `m == n` reproduces the identity ordering.
pub fn sample_indices_sorted<R: Rng>(rng: &mut R, n: usize, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m.min(n) {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut chosen = idx[..m.min(n)].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Stratified labeled/unlabeled split of a labeled pool.
///
/// Keeps ceil(labeled_fraction * |pool|) samples labeled — at least
/// `per_class_minimum` from every class, remainder apportioned to classes by
/// largest remainder — and strips the labels from the rest. Both halves
/// preserve the pool's original order.
pub fn split(pool: &[Sample], num_classes: usize, spec: &SplitSpec) -> Result<(Vec<Sample>, Vec<Sample>)> {
    if pool.is_empty() {
        return Err(Error::Argument("empty pool".into()));
    }
    if !(spec.labeled_fraction > 0.0 && spec.labeled_fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "labeled_fraction must be in (0,1], got {}",
            spec.labeled_fraction
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, s) in pool.iter().enumerate() {
        let y = s
            .label
            .ok_or_else(|| Error::Argument(format!("pool sample {i} has no label")))?;
        by_class[y].push(i);
    }
    for (y, idx) in by_class.iter().enumerate() {
        if idx.len() < spec.per_class_minimum {
            return Err(Error::Data(format!(
                "class {y} has {} examples, fewer than per_class_minimum={}",
                idx.len(),
                spec.per_class_minimum
            )));
        }
    }
    let total = pool.len();
    let target = ((spec.labeled_fraction * total as f64).ceil() as usize)
        .clamp(spec.per_class_minimum * num_classes, total);

    // Largest-remainder apportionment of `target` across classes.
    let mut alloc: Vec<usize> = Vec::with_capacity(num_classes);
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(num_classes);
    let mut assigned = 0usize;
    for (y, idx) in by_class.iter().enumerate() {
        let exact = target as f64 * idx.len() as f64 / total as f64;
        let base = exact.floor() as usize;
        alloc.push(base);
        remainders.push((y, exact - base as f64));
        assigned += base;
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut leftover = target.saturating_sub(assigned);
    for &(y, _) in remainders.iter().cycle() {
        if leftover == 0 {
            break;
        }
        if alloc[y] < by_class[y].len() {
            alloc[y] += 1;
            leftover -= 1;
        }
    }
    // Enforce the per-class minimum, reclaiming the excess from the classes
    // with the largest allocations (deterministic tie order by class index).
    loop {
        let mut deficit = 0usize;
        for (y, a) in alloc.iter_mut().enumerate() {
            if *a < spec.per_class_minimum {
                deficit += spec.per_class_minimum - *a;
                *a = spec.per_class_minimum;
                let _ = y;
            }
        }
        if deficit == 0 {
            break;
        }
        while deficit > 0 {
            let (y_max, _) = alloc
                .iter()
                .enumerate()
                .filter(|&(y, &a)| a > spec.per_class_minimum && a <= by_class[y].len())
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .ok_or_else(|| Error::Data("cannot satisfy per-class minimum within target size".into()))?;
            alloc[y_max] -= 1;
            deficit -= 1;
        }
        break;
    }

    let mut rng = seed::rng(spec.seed);
    let mut keep = vec![false; total];
    for (y, idx) in by_class.iter().enumerate() {
        let chosen = sample_indices_sorted(&mut rng, idx.len(), alloc[y]);
        for c in chosen {
            keep[idx[c]] = true;
        }
    }
    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for (i, s) in pool.iter().enumerate() {
        if keep[i] {
            labeled.push(s.clone());
        } else {
            unlabeled.push(Sample::new(s.features.clone(), None));
        }
    }
    Ok((labeled, unlabeled))
}

/// Generate K isotropic Gaussian blobs in the plane.
///
/// Centers sit on a regular K-gon with side length `separation` (so all
/// pairwise center distances are at least `separation`), randomly rotated and
/// offset from the origin; points are `center + noise * N(0, I_2)`.
pub fn make_synthetic_blobs(
    num_classes: usize,
    per_class: usize,
    separation: f64,
    noise: f64,
    seed_value: u64,
) -> Result<Vec<Sample>> {
    if num_classes < 2 {
        return Err(Error::Argument("need at least 2 classes".into()));
    }
    if separation <= 0.0 || noise <= 0.0 {
        return Err(Error::Argument("separation and noise must be positive".into()));
    }
    let mut rng = seed::rng(seed_value);
    let k = num_classes as f64;
    let circumradius = if num_classes == 2 {
        separation / 2.0
    } else {
        separation / (2.0 * (std::f64::consts::PI / k).sin())
    };
    let rotation = rng.gen_range(0.0..std::f64::consts::TAU);
    let offset_dir = rng.gen_range(0.0..std::f64::consts::TAU);
    let offset = 0.375 * separation;
    let centers: Vec<[f64; 2]> = (0..num_classes)
        .map(|c| {
            let a = rotation + std::f64::consts::TAU * c as f64 / k;
            [
                circumradius * a.cos() + offset * offset_dir.cos(),
                circumradius * a.sin() + offset * offset_dir.sin(),
            ]
        })
        .collect();

    let mut out = Vec::with_capacity(num_classes * per_class);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let g0 = gaussian(&mut rng);
            let g1 = gaussian(&mut rng);
            let x = center[0] + noise * g0;
            let y = center[1] + noise * g1;
            out.push(Sample::new(vec![(0, x), (1, y)], Some(c)));
        }
    }
    Ok(out)
}

/// One standard normal draw (Box-Muller, polar form avoided for determinism
/// of draw counts: always consumes exactly two uniforms).
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Dataset manifest written next to split artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub u: usize,
    pub test: usize,
    #[serde(rename = "K")]
    pub num_classes: usize,
    pub d: usize,
    pub feature_radius: f64,
}

impl Manifest {
    pub fn of(ds: &Dataset) -> Self {
        Manifest {
            n: ds.n(),
            u: ds.u(),
            test: ds.test.len(),
            num_classes: ds.num_classes,
            d: ds.dimension,
            feature_radius: ds.feature_radius,
        }
    }
}
