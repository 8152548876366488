//! k-means, agglomerative Ward and DBSCAN on a dense point matrix.

mod dbscan;
mod kmeans;
mod ward;

pub use dbscan::{dbscan, dbscan_shuffled, shuffled_order};
pub use kmeans::{kmeans, KMeansParams, KMeansResult};
pub use ward::{ward, ward_tree, Dendrogram, Merge};

use ndarray::ArrayView2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} is outside 2..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("point order is not a permutation of 0..{0}")]
    BadOrder(usize),
}

pub type Result<T, E = ClusterError> = std::result::Result<T, E>;

fn check_k(x: &ArrayView2<'_, f64>, k: usize) -> Result<()> {
    let n = x.nrows();
    if k < 2 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    check_finite(x)
}

fn check_finite(x: &ArrayView2<'_, f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::NonFinite);
    }
    Ok(())
}
