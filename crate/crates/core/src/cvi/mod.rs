//! Cluster-validity indices: Calinski-Harabasz, Davies-Bouldin, silhouette,
//! CDR, CVNNH and k-DBCV.
//!
//! Every index drops NOISE points first and works on the remaining clusters.

mod centroid;
mod density;
mod report;

pub use centroid::{calinski_harabasz, davies_bouldin, silhouette};
pub use density::{cdr, cvnnh, kdbcv, DEFAULT_CVNN_K};
pub use report::{score_all, write_score_report, ScoreRow, Scores};

use ndarray::ArrayView2;
use thiserror::Error;

use crate::partition::{ClusterSet, NOISE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CviError {
    #[error("{got} points but {expected} labels")]
    LengthMismatch { expected: usize, got: usize },
    #[error("index needs between {min} and {max} clusters, got {k}")]
    ClusterCount { k: usize, min: usize, max: usize },
    #[error("degenerate partition: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input contains non-finite values")]
    NonFinite,
}

pub type Result<T, E = CviError> = std::result::Result<T, E>;

/// Non-noise points grouped by cluster.
pub(crate) struct Clustered {
    pub pts: Vec<Vec<f64>>,
    /// Dense cluster index `0..k` per retained point.
    pub cluster: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    pub dim: usize,
}

impl Clustered {
    pub fn new(x: ArrayView2<'_, f64>, partition: &ClusterSet) -> Result<Self> {
        if x.nrows() != partition.len() {
            return Err(CviError::LengthMismatch {
                expected: x.nrows(),
                got: partition.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CviError::NonFinite);
        }
        let mut ids: Vec<i64> = partition.labels().iter().copied().filter(|&l| l != NOISE).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut pts = Vec::new();
        let mut cluster = Vec::new();
        let mut members = vec![Vec::new(); ids.len()];
        for (row, &l) in x.rows().into_iter().zip(partition.labels()) {
            if l == NOISE {
                continue;
            }
            let c = ids.binary_search(&l).expect("label collected above");
            members[c].push(pts.len());
            cluster.push(c);
            pts.push(row.to_vec());
        }
        Ok(Self {
            pts,
            cluster,
            members,
            dim: x.ncols(),
        })
    }

    pub fn n(&self) -> usize {
        self.pts.len()
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn require_k(&self, min: usize, max: usize) -> Result<()> {
        let k = self.k();
        if k < min || k > max {
            return Err(CviError::ClusterCount { k, min, max });
        }
        Ok(())
    }

    pub fn centroid(&self, c: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for &i in &self.members[c] {
            for (s, v) in m.iter_mut().zip(&self.pts[i]) {
                *s += v;
            }
        }
        let len = self.members[c].len() as f64;
        m.iter_mut().for_each(|v| *v /= len);
        m
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        crate::distance::sq_euclidean_slice(&self.pts[i], &self.pts[j]).sqrt()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use ndarray::{array, Array2};

    use crate::partition::{ClusterSet, Label, Provenance};

    pub fn set(labels: &[Label]) -> ClusterSet {
        ClusterSet::new(labels.to_vec(), Provenance::External("test".into()))
    }

    /// 1-D points {0, 1, 10, 11} in two pairs.
    pub fn pairs() -> (Array2<f64>, ClusterSet) {
        (array![[0.0], [1.0], [10.0], [11.0]], set(&[0, 0, 1, 1]))
    }
}
