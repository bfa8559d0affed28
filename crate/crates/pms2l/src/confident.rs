//! Identification of confident clusters: the clusters whose labeled examples
//! concentrate on at most `kappa` classes, up to a violation mass of eta/G
//! measured against the whole labeled sample.

use serde::{Deserialize, Serialize};

use crate::clustering::{assign_all, Partition};
use crate::data::Sample;
use crate::{Error, Result};

/// A cluster admitted into the confident set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidentCluster {
    pub cluster_id: usize,
    /// The predominant classes Y_kappa(C), at most kappa of them, ordered by
    /// descending count then ascending class index.
    pub predominant: Vec<usize>,
    /// n_eta(j): labeled examples falling in this cluster.
    pub labeled_count: usize,
    /// u_eta(j): unlabeled examples falling in this cluster.
    pub unlabeled_count: usize,
    /// Fraction of the labeled sample that lands in this cluster with a label
    /// outside the predominant set.
    pub violation_mass: f64,
}

/// The confident cluster set with its construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidentClusterSet {
    pub clusters: Vec<ConfidentCluster>,
    pub kappa: usize,
    pub eta: f64,
    #[serde(rename = "G")]
    pub num_clusters: usize,
    /// Sum of labeled counts over confident clusters.
    pub n_eta: usize,
    /// Sum of unlabeled counts over confident clusters.
    pub u_eta: usize,
}

impl ConfidentClusterSet {
    /// Empty set (supervised-only training).
    pub fn empty(kappa: usize, eta: f64, num_clusters: usize) -> Self {
        ConfidentClusterSet { clusters: Vec::new(), kappa, eta, num_clusters, n_eta: 0, u_eta: 0 }
    }

    pub fn get(&self, cluster_id: usize) -> Option<&ConfidentCluster> {
        self.clusters.iter().find(|c| c.cluster_id == cluster_id)
    }
}

/// The kappa most frequent classes in a label multiset; ties broken by lower
/// class index; fewer than kappa distinct classes returns all present.
pub fn predominant_classes(labels: &[usize], kappa: usize, num_classes: usize) -> Result<Vec<usize>> {
    if labels.is_empty() {
        return Err(Error::Argument("empty label multiset".into()));
    }
    let mut counts = vec![0usize; num_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let mut order: Vec<usize> = (0..num_classes).filter(|&c| counts[c] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order.truncate(kappa);
    Ok(order)
}

/// Build the confident cluster set from a partition and the labeled sample.
///
/// A cluster with at least one labeled example is admitted iff the fraction
/// of the *whole* labeled sample that falls in it with a label outside its
/// predominant classes is at most eta/G. Clusters without labeled examples
/// are excluded (their predominant set would be undefined).
pub fn identify(
    partition: &Partition,
    labeled: &[Sample],
    unlabeled: &[Sample],
    kappa: usize,
    eta: f64,
    num_classes: usize,
) -> Result<ConfidentClusterSet> {
    if kappa >= num_classes {
        return Err(Error::Config(format!(
            "kappa={kappa} must be < K={num_classes}: the unlabeled margin needs classes outside Y_kappa"
        )));
    }
    if kappa < 1 {
        return Err(Error::Config("kappa must be >= 1".into()));
    }
    if eta < 0.0 {
        return Err(Error::Argument("eta must be >= 0".into()));
    }
    let n = labeled.len();
    let g = partition.num_clusters;
    let labeled_assign = assign_all(partition, labeled)?;
    let unlabeled_assign = assign_all(partition, unlabeled)?;

    let mut labels_by_cluster: Vec<Vec<usize>> = vec![Vec::new(); g];
    for (s, &c) in labeled.iter().zip(labeled_assign.iter()) {
        labels_by_cluster[c].push(s.label.expect("labeled sample"));
    }
    let mut unlabeled_counts = vec![0usize; g];
    for &c in &unlabeled_assign {
        unlabeled_counts[c] += 1;
    }

    let threshold = eta / g as f64;
    let mut clusters = Vec::new();
    for c in 0..g {
        let labels = &labels_by_cluster[c];
        if labels.is_empty() {
            continue;
        }
        let predominant = predominant_classes(labels, kappa, num_classes)?;
        let violations = labels.iter().filter(|y| !predominant.contains(y)).count();
        let violation_mass = violations as f64 / n as f64;
        if violation_mass <= threshold {
            clusters.push(ConfidentCluster {
                cluster_id: c,
                predominant,
                labeled_count: labels.len(),
                unlabeled_count: unlabeled_counts[c],
                violation_mass,
            });
        }
    }
    let n_eta = clusters.iter().map(|c| c.labeled_count).sum();
    let u_eta = clusters.iter().map(|c| c.unlabeled_count).sum();
    Ok(ConfidentClusterSet { clusters, kappa, eta, num_clusters: g, n_eta, u_eta })
}

/// The largest eta certified consistent with the stability analysis: the
/// bound L/u + L*sqrt(log(2/delta)/(2u)) + sqrt(log(2/delta)/(2n)).
pub fn eta_from_stability(l_hat: f64, n: usize, u: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Argument(format!("delta must be in (0,1), got {delta}")));
    }
    if n < 2 || u < 2 {
        return Err(Error::Argument("need n >= 2 and u >= 2".into()));
    }
    if l_hat < 0.0 {
        return Err(Error::Argument("L must be >= 0".into()));
    }
    let log_term = (2.0 / delta).ln();
    Ok(l_hat / u as f64
        + l_hat * (log_term / (2.0 * u as f64)).sqrt()
        + (log_term / (2.0 * n as f64)).sqrt())
}
