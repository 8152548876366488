use ndarray::ArrayView2;
use rayon::prelude::*;

use super::{Clustered, CviError, Result};
use crate::distance::sq_euclidean_slice;
use crate::partition::ClusterSet;

/// Ratio of between- to within-cluster dispersion, scaled by `(n−k)/(k−1)`.
pub fn calinski_harabasz(x: ArrayView2<'_, f64>, partition: &ClusterSet) -> Result<f64> {
    let c = Clustered::new(x, partition)?;
    let (n, k) = (c.n(), c.k());
    c.require_k(2, n.saturating_sub(1).max(1))?;
    let mut overall = vec![0.0; c.dim];
    for p in &c.pts {
        for (s, v) in overall.iter_mut().zip(p) {
            *s += v;
        }
    }
    overall.iter_mut().for_each(|v| *v /= n as f64);
    let (mut tr_w, mut tr_b) = (0.0, 0.0);
    for q in 0..k {
        let centre = c.centroid(q);
        tr_b += c.members[q].len() as f64 * sq_euclidean_slice(&centre, &overall);
        tr_w += c.members[q].iter().map(|&i| sq_euclidean_slice(&c.pts[i], &centre)).sum::<f64>();
    }
    if tr_w <= 0.0 {
        return Err(CviError::Degenerate("within-cluster dispersion is zero".into()));
    }
    Ok(tr_b / tr_w * (n - k) as f64 / (k - 1) as f64)
}

/// Mean over clusters of the worst `(s_i + s_j)/d_ij` similarity.
pub fn davies_bouldin(x: ArrayView2<'_, f64>, partition: &ClusterSet) -> Result<f64> {
    let c = Clustered::new(x, partition)?;
    let k = c.k();
    c.require_k(2, usize::MAX)?;
    let centres: Vec<Vec<f64>> = (0..k).map(|q| c.centroid(q)).collect();
    let spread: Vec<f64> = (0..k)
        .map(|q| {
            let m = &c.members[q];
            m.iter().map(|&i| sq_euclidean_slice(&c.pts[i], &centres[q]).sqrt()).sum::<f64>() / m.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..k).filter(|&j| j != i) {
            let d = sq_euclidean_slice(&centres[i], &centres[j]).sqrt();
            if d == 0.0 {
                return Err(CviError::Degenerate(format!("clusters {i} and {j} share a centroid")));
            }
            worst = worst.max((spread[i] + spread[j]) / d);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Mean silhouette with pairwise distances; singletons score 0.
pub fn silhouette(x: ArrayView2<'_, f64>, partition: &ClusterSet) -> Result<f64> {
    let c = Clustered::new(x, partition)?;
    let (n, k) = (c.n(), c.k());
    c.require_k(2, n.saturating_sub(1).max(1))?;
    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = c.cluster[i];
            if c.members[own].len() == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[c.cluster[j]] += c.dist(i, j);
                }
            }
            let a = sums[own] / (c.members[own].len() - 1) as f64;
            let b = (0..k)
                .filter(|&q| q != own)
                .map(|q| sums[q] / c.members[q].len() as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / n as f64)
}
