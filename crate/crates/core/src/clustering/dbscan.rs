use std::collections::VecDeque;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_finite, ClusterError, Result};
use crate::distance::{rows, sq_euclidean_slice};
use crate::partition::{ClusterSet, Label, Provenance, NOISE};

/// Radius queries over points sorted by their first coordinate.
struct SweepIndex {
    pts: Vec<Vec<f64>>,
    order: Vec<usize>,
    keys: Vec<f64>,
    eps: f64,
}

impl SweepIndex {
    fn new(pts: Vec<Vec<f64>>, eps: f64) -> Self {
        let key = |p: &Vec<f64>| p.first().copied().unwrap_or(0.0);
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| key(&pts[a]).total_cmp(&key(&pts[b])).then(a.cmp(&b)));
        let keys = order.iter().map(|&i| key(&pts[i])).collect();
        Self { pts, order, keys, eps }
    }

    /// Points within `eps` of `i`, itself included, in index order.
    fn neighbours(&self, i: usize, out: &mut Vec<usize>) {
        out.clear();
        let p = &self.pts[i];
        let x0 = p.first().copied().unwrap_or(0.0);
        let lo = self.keys.partition_point(|&k| k < x0 - self.eps);
        let hi = self.keys.partition_point(|&k| k <= x0 + self.eps);
        let eps2 = self.eps * self.eps;
        for &j in &self.order[lo..hi] {
            if sq_euclidean_slice(p, &self.pts[j]) <= eps2 {
                out.push(j);
            }
        }
        out.sort_unstable();
    }
}

/// A seeded permutation of `0..n`.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Density-based clustering. A point is core when at least `min_samples`
/// points (itself included) lie within `epsilon`. Clusters are grown from
/// unvisited core points taken in `point_order` (index order when `None`);
/// a border point joins the first cluster that reaches it.
pub fn dbscan(
    x: ArrayView2<'_, f64>,
    epsilon: f64,
    min_samples: usize,
    point_order: Option<&[usize]>,
) -> Result<ClusterSet> {
    let labels = dbscan_raw(x, epsilon, min_samples, point_order)?;
    Ok(ClusterSet::canonical(
        labels,
        Provenance::Dbscan {
            epsilon,
            min_samples,
            order_seed: None,
        },
    ))
}

/// [`dbscan`] with the point order drawn from `seed`.
pub fn dbscan_shuffled(x: ArrayView2<'_, f64>, epsilon: f64, min_samples: usize, seed: u64) -> Result<ClusterSet> {
    let order = shuffled_order(x.nrows(), seed);
    let labels = dbscan_raw(x, epsilon, min_samples, Some(&order))?;
    Ok(ClusterSet::canonical(
        labels,
        Provenance::Dbscan {
            epsilon,
            min_samples,
            order_seed: Some(seed),
        },
    ))
}

fn dbscan_raw(x: ArrayView2<'_, f64>, epsilon: f64, min_samples: usize, point_order: Option<&[usize]>) -> Result<Vec<Label>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(ClusterError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if min_samples < 2 {
        return Err(ClusterError::InvalidParameter(format!(
            "min_samples must be at least 2, got {min_samples}"
        )));
    }
    check_finite(&x)?;
    let n = x.nrows();
    let default_order: Vec<usize>;
    let order = match point_order {
        Some(o) => {
            let mut seen = vec![false; n];
            if o.len() != n || o.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(ClusterError::BadOrder(n));
            }
            o
        }
        None => {
            default_order = (0..n).collect();
            &default_order
        }
    };

    let index = SweepIndex::new(rows(x), epsilon);
    let mut buf = Vec::new();
    let core: Vec<bool> = (0..n)
        .map(|i| {
            index.neighbours(i, &mut buf);
            buf.len() >= min_samples
        })
        .collect();

    let mut labels = vec![NOISE; n];
    let mut next: Label = 0;
    let mut queue = VecDeque::new();
    for &start in order {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        let c = next;
        next += 1;
        labels[start] = c;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            index.neighbours(p, &mut buf);
            for &q in &buf {
                if labels[q] == NOISE {
                    labels[q] = c;
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    Ok(labels)
}
