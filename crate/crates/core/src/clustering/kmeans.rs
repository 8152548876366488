use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_k, Result};
use crate::distance::{rows, sq_euclidean_slice};
use crate::partition::{ClusterSet, Label, Provenance};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Lloyd stops once no centroid moves farther than this.
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub partition: ClusterSet,
    pub inertia: f64,
    pub centroids: Array2<f64>,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_trace: Vec<f64>,
    pub n_iter: usize,
}

/// Greedy k-means++ seeding followed by Lloyd iterations.
pub fn kmeans(x: ArrayView2<'_, f64>, params: &KMeansParams) -> Result<KMeansResult> {
    check_k(&x, params.k)?;
    let pts = rows(x);
    let (n, dim, k) = (pts.len(), x.ncols(), params.k);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids: Vec<Vec<f64>> = plus_plus(&pts, k, &mut rng);

    let mut labels = vec![0usize; n];
    let mut inertia = assign(&pts, &centroids, &mut labels);
    let mut trace = vec![inertia];
    let mut n_iter = 0;
    while n_iter < params.max_iter {
        n_iter += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in pts.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &c)| s.into_iter().map(|v| v / c.max(1) as f64).collect())
            .collect();
        repair_empty(&pts, &labels, &mut next, &counts);
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_euclidean_slice(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        inertia = assign(&pts, &centroids, &mut labels);
        trace.push(inertia);
        if shift < params.tol {
            break;
        }
    }

    let labels: Vec<Label> = labels.iter().map(|&l| l as Label).collect();
    let provenance = Provenance::KMeans {
        k,
        seed: params.seed,
        max_iter: params.max_iter,
        tol: params.tol,
    };
    let flat: Vec<f64> = centroids.into_iter().flatten().collect();
    Ok(KMeansResult {
        partition: ClusterSet::canonical(labels, provenance),
        inertia,
        centroids: Array2::from_shape_vec((k, dim), flat).expect("k×dim centroids"),
        inertia_trace: trace,
        n_iter,
    })
}

/// Nearest-centroid assignment (lowest index on ties); returns the inertia.
fn assign(pts: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, l) in pts.iter().zip(labels.iter_mut()) {
        let (best, d) = nearest(p, centroids);
        *l = best;
        inertia += d;
    }
    inertia
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centre) in centroids.iter().enumerate() {
        let d = sq_euclidean_slice(p, centre);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Moves each empty cluster's centroid onto the point farthest from its own
/// centroid; each point is used at most once.
fn repair_empty(pts: &[Vec<f64>], labels: &[usize], centroids: &mut [Vec<f64>], counts: &[usize]) {
    if counts.iter().all(|&c| c > 0) {
        return;
    }
    let mut far: Vec<(f64, usize)> = pts
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, &l))| (sq_euclidean_slice(p, &centroids[l]), i))
        .collect();
    far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut donors = far.into_iter();
    for c in 0..centroids.len() {
        if counts[c] == 0 {
            if let Some((_, i)) = donors.next() {
                centroids[c] = pts[i].clone();
            }
        }
    }
}

/// Greedy k-means++: each new centre is the best of `2 + ln k` candidates
/// drawn proportionally to squared distance, by resulting potential.
fn plus_plus(pts: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = pts.len();
    let trials = 2 + (k as f64).ln() as usize;
    let first = rng.random_range(0..n);
    let mut centres = vec![pts[first].clone()];
    let mut closest: Vec<f64> = pts.iter().map(|p| sq_euclidean_slice(p, &pts[first])).collect();
    let mut pot: f64 = closest.iter().sum();
    for _ in 1..k {
        let mut cum = Vec::with_capacity(n);
        let mut acc = 0.0;
        for &d in &closest {
            acc += d;
            cum.push(acc);
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        let mut candidates: Vec<usize> = (0..trials)
            .map(|_| {
                let r = rng.random::<f64>() * pot;
                cum.partition_point(|&c| c < r).min(n - 1)
            })
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        for cand in candidates {
            let dist: Vec<f64> = pts
                .iter()
                .zip(&closest)
                .map(|(p, &c)| c.min(sq_euclidean_slice(p, &pts[cand])))
                .collect();
            let cand_pot: f64 = dist.iter().sum();
            if best.as_ref().is_none_or(|b| cand_pot < b.0) {
                best = Some((cand_pot, cand, dist));
            }
        }
        let (p, idx, dist) = best.expect("at least one candidate");
        centres.push(pts[idx].clone());
        closest = dist;
        pot = p;
    }
    centres
}
