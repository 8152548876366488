//! Cluster labelings shared by every stage of the pipeline.

use std::collections::HashMap;
use std::fmt;

/// A cluster id, or [`NOISE`].
pub type Label = i64;

/// Reserved label for points that no cluster claims. Distinct from every
/// cluster id, which are always non-negative.
pub const NOISE: Label = -1;

/// Where a labeling came from, kept so reports and manifests can reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    KMeans {
        k: usize,
        seed: u64,
        max_iter: usize,
        tol: f64,
    },
    Ward {
        k: usize,
    },
    Dbscan {
        epsilon: f64,
        min_samples: usize,
        order_seed: Option<u64>,
    },
    Nemi {
        base_id: usize,
        members: usize,
    },
    /// Read from a file or built by hand.
    External(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::KMeans {
                k,
                seed,
                max_iter,
                tol,
            } => write!(f, "kmeans(k={k},seed={seed},max_iter={max_iter},tol={tol})"),
            Provenance::Ward { k } => write!(f, "ward(k={k})"),
            Provenance::Dbscan {
                epsilon,
                min_samples,
                order_seed,
            } => match order_seed {
                Some(s) => write!(f, "dbscan(eps={epsilon},min_samples={min_samples},order_seed={s})"),
                None => write!(f, "dbscan(eps={epsilon},min_samples={min_samples})"),
            },
            Provenance::Nemi { base_id, members } => {
                write!(f, "nemi(base_id={base_id},members={members})")
            }
            Provenance::External(s) => write!(f, "external({s})"),
        }
    }
}

/// A labeling of `n` points into clusters, with an explicit noise sentinel.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSet {
    labels: Vec<Label>,
    n_clusters: usize,
    pub provenance: Provenance,
}

impl ClusterSet {
    /// Wraps labels as given. Labels must be [`NOISE`] or non-negative.
    ///
    /// # Panics
    /// Panics on a negative label other than [`NOISE`].
    pub fn new(labels: Vec<Label>, provenance: Provenance) -> Self {
        assert!(
            labels.iter().all(|&l| l == NOISE || l >= 0),
            "cluster labels must be non-negative or NOISE"
        );
        let n_clusters = count_distinct(&labels);
        Self {
            labels,
            n_clusters,
            provenance,
        }
    }

    /// Builds a canonical labeling: ids renumbered `0..n_clusters` by first
    /// occurrence in point order, noise untouched.
    pub fn canonical(labels: Vec<Label>, provenance: Provenance) -> Self {
        Self::new(canonicalize(&labels), provenance)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<Label> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct non-noise ids.
    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    pub fn noise_fraction(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.n_noise() as f64 / self.labels.len() as f64
        }
    }

    /// Largest id in use, if any point is clustered.
    pub fn max_label(&self) -> Option<Label> {
        self.labels.iter().copied().filter(|&l| l != NOISE).max()
    }

    /// Point count per id, indexed by id (ids must be dense enough to index).
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.max_label().map_or(0, |m| m as usize + 1)];
        for &l in &self.labels {
            if l != NOISE {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Returns the same partition renumbered by first occurrence.
    pub fn canonicalized(&self) -> Self {
        Self::canonical(self.labels.clone(), self.provenance.clone())
    }
}

fn count_distinct(labels: &[Label]) -> usize {
    let mut seen: Vec<Label> = labels.iter().copied().filter(|&l| l != NOISE).collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Renumbers ids `0..k` in order of first appearance; NOISE stays NOISE.
pub fn canonicalize(labels: &[Label]) -> Vec<Label> {
    let mut map: HashMap<Label, Label> = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            if l == NOISE {
                NOISE
            } else {
                let next = map.len() as Label;
                *map.entry(l).or_insert(next)
            }
        })
        .collect()
}
