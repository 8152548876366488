use ndarray::ArrayView2;
use rayon::prelude::*;

use super::{Clustered, CviError, Result};
use crate::partition::{ClusterSet, NOISE};

/// Neighbourhood size used by [`cvnnh`] unless told otherwise.
pub const DEFAULT_CVNN_K: usize = 10;

/// Stand-in for zero distances in the core-distance formula, relative to the
/// smallest positive pairwise distance.
const ZERO_DISTANCE_SCALE: f64 = 1e-6;

/// Size-weighted uniformity of nearest-same-cluster-neighbour distances.
pub fn cdr(x: ArrayView2<'_, f64>, partition: &ClusterSet) -> Result<f64> {
    let c = Clustered::new(x, partition)?;
    c.require_k(1, usize::MAX)?;
    let mut total = 0.0;
    for m in &c.members {
        if m.len() < 2 {
            continue;
        }
        let local: Vec<f64> = m
            .iter()
            .map(|&i| {
                m.iter()
                    .filter(|&&j| j != i)
                    .map(|&j| c.dist(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let avg = local.iter().sum::<f64>() / local.len() as f64;
        if avg > 0.0 {
            let unif = local.iter().map(|d| (d - avg).abs()).sum::<f64>() / avg;
            total += m.len() as f64 * unif;
        }
    }
    Ok(total / c.n() as f64)
}

/// Separation (worst cluster's mean foreign fraction among `k` nearest
/// neighbours) plus compactness (mean intra-cluster pairwise distance).
pub fn cvnnh(x: ArrayView2<'_, f64>, partition: &ClusterSet, k: usize) -> Result<f64> {
    let c = Clustered::new(x, partition)?;
    c.require_k(1, usize::MAX)?;
    let n = c.n();
    if k == 0 || k >= n {
        return Err(CviError::InvalidParameter(format!(
            "neighbourhood size {k} must be in 1..{n}"
        )));
    }
    let foreign: Vec<usize> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (c.dist(i, j), j)).collect();
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d[..k].iter().filter(|p| c.cluster[p.1] != c.cluster[i]).count()
        })
        .collect();
    let sep = c
        .members
        .iter()
        .map(|m| m.iter().map(|&i| foreign[i] as f64 / k as f64).sum::<f64>() / m.len() as f64)
        .fold(0.0, f64::max);

    let (mut dist_sum, mut pairs) = (0.0, 0usize);
    for m in c.members.iter().filter(|m| m.len() >= 2) {
        for (a, &i) in m.iter().enumerate() {
            for &j in &m[a + 1..] {
                dist_sum += 2.0 * c.dist(i, j);
            }
        }
        pairs += m.len() * (m.len() - 1);
    }
    let comp = if pairs == 0 { 0.0 } else { dist_sum / pairs as f64 };
    Ok(sep + comp)
}

/// Density-based validity from mutual-reachability distances: per cluster,
/// `(sep − spars)/max(sep, spars)` weighted by size, where `spars` is the
/// largest minimum-spanning-tree edge inside the cluster and `sep` the
/// smallest mutual-reachability distance to any other cluster.
///
/// Returns −1 when every point is NOISE.
pub fn kdbcv(x: ArrayView2<'_, f64>, partition: &ClusterSet) -> Result<f64> {
    if partition.labels().iter().all(|&l| l == NOISE) {
        if x.nrows() != partition.len() {
            return Err(CviError::LengthMismatch {
                expected: x.nrows(),
                got: partition.len(),
            });
        }
        return Ok(-1.0);
    }
    let c = Clustered::new(x, partition)?;
    c.require_k(2, usize::MAX)?;
    if let Some(q) = c.members.iter().position(|m| m.len() < 2) {
        return Err(CviError::Degenerate(format!(
            "cluster {q} has a single point; its core distance is undefined"
        )));
    }
    let n = c.n();
    let f = c.dim as f64;

    let mut min_positive = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = c.dist(i, j);
            if d > 0.0 && d < min_positive {
                min_positive = d;
            }
        }
    }
    let zero_stand_in = if min_positive.is_finite() {
        min_positive * ZERO_DISTANCE_SCALE
    } else {
        f64::MIN_POSITIVE
    };

    // coredist = (mean (1/d)^f)^(-1/f), evaluated relative to the smallest d
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let m = &c.members[c.cluster[i]];
            let ds: Vec<f64> = m
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let d = c.dist(i, j);
                    if d > 0.0 {
                        d
                    } else {
                        zero_stand_in
                    }
                })
                .collect();
            let lo = ds.iter().copied().fold(f64::INFINITY, f64::min);
            let mean = ds.iter().map(|d| (lo / d).powf(f)).sum::<f64>() / ds.len() as f64;
            lo * mean.powf(-1.0 / f)
        })
        .collect();
    let mrd = |i: usize, j: usize| core[i].max(core[j]).max(c.dist(i, j));

    let spars: Vec<f64> = c.members.iter().map(|m| max_mst_edge(m, &mrd)).collect();
    let k = c.k();
    let mut sep = vec![f64::INFINITY; k];
    for i in 0..n {
        for j in (i + 1)..n {
            let (ci, cj) = (c.cluster[i], c.cluster[j]);
            if ci != cj {
                let d = mrd(i, j);
                sep[ci] = sep[ci].min(d);
                sep[cj] = sep[cj].min(d);
            }
        }
    }
    let total: f64 = (0..k)
        .map(|q| {
            let denom = sep[q].max(spars[q]);
            let v = if denom > 0.0 { (sep[q] - spars[q]) / denom } else { 0.0 };
            c.members[q].len() as f64 * v
        })
        .sum();
    Ok(total / n as f64)
}

/// Largest edge of the minimum spanning tree over `members` (Prim, dense).
fn max_mst_edge(members: &[usize], w: &impl Fn(usize, usize) -> f64) -> f64 {
    let m = members.len();
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    best[0] = 0.0;
    let mut largest = 0.0f64;
    for _ in 0..m {
        let mut u = usize::MAX;
        for v in 0..m {
            if !in_tree[v] && (u == usize::MAX || best[v] < best[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        largest = largest.max(best[u]);
        for v in 0..m {
            if !in_tree[v] {
                let d = w(members[u], members[v]);
                if d < best[v] {
                    best[v] = d;
                }
            }
        }
    }
    largest
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvi::fixtures::{pairs, set};
    use crate::partition::Label;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cdr_hand_values() {
        let x = array![[0.0], [1.0], [3.0]];
        assert!((cdr(x.view(), &set(&[0, 0, 0])).unwrap() - 1.0).abs() < 1e-12);
        let even = array![[0.0], [1.0], [2.0], [3.0]];
        assert_eq!(cdr(even.view(), &set(&[0, 0, 0, 0])).unwrap(), 0.0);
        assert_eq!(cdr(x.view(), &set(&[0, 1, 2])).unwrap(), 0.0);
    }

    #[test]
    fn cdr_invariant_under_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Array2::from_shape_fn((60, 2), |_| rng.random::<f64>());
        let labels: Vec<Label> = (0..60).map(|i| (i % 3) as Label).collect();
        let a = cdr(x.view(), &set(&labels)).unwrap();
        let b = cdr(x.mapv(|v| 10.0 * v).view(), &set(&labels)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn cvnnh_hand_values() {
        let (x, p) = pairs();
        assert!((cvnnh(x.view(), &p, 1).unwrap() - 1.0).abs() < 1e-12);
        // with K = 3 each point sees its partner and both foreign points
        let sep_only = cvnnh(x.view(), &p, 3).unwrap() - 1.0;
        assert!((sep_only - 2.0 / 3.0).abs() < 1e-12);
        // all singletons: compactness is 0, separation is 1
        assert_eq!(cvnnh(x.view(), &set(&[0, 1, 2, 3]), 2).unwrap(), 1.0);
        assert!(cvnnh(x.view(), &p, 4).is_err());
        assert!(cvnnh(x.view(), &p, 0).is_err());
    }

    #[test]
    fn kdbcv_all_noise_is_minus_one() {
        let (x, _) = pairs();
        assert_eq!(kdbcv(x.view(), &set(&[NOISE; 4])).unwrap(), -1.0);
    }

    #[test]
    fn kdbcv_errors() {
        let (x, _) = pairs();
        assert!(matches!(kdbcv(x.view(), &set(&[0, 0, 0, 0])), Err(CviError::ClusterCount { .. })));
        assert!(matches!(kdbcv(x.view(), &set(&[0, 0, 0, 1])), Err(CviError::Degenerate(_))));
    }

    /// Direct transcription: full MRD matrix, Kruskal MST, explicit sums.
    fn kdbcv_oracle(x: &Array2<f64>, labels: &[Label]) -> f64 {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != NOISE).collect();
        let n = idx.len();
        let f = x.ncols() as f64;
        let d = |a: usize, b: usize| -> f64 {
            x.row(idx[a])
                .iter()
                .zip(x.row(idx[b]).iter())
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let lab = |a: usize| labels[idx[a]];
        let mut minpos = f64::INFINITY;
        for a in 0..n {
            for b in 0..n {
                if a != b && d(a, b) > 0.0 {
                    minpos = minpos.min(d(a, b));
                }
            }
        }
        let core: Vec<f64> = (0..n)
            .map(|a| {
                let mut knn: Vec<f64> = (0..n)
                    .filter(|&b| b != a && lab(b) == lab(a))
                    .map(|b| if d(a, b) > 0.0 { d(a, b) } else { minpos * 1e-6 })
                    .collect();
                knn.sort_by(f64::total_cmp);
                let s: f64 = knn.iter().map(|v| (1.0 / v).powf(f)).sum();
                (s / knn.len() as f64).powf(-1.0 / f)
            })
            .collect();
        let mrd = |a: usize, b: usize| core[a].max(core[b]).max(d(a, b));
        let mut ids: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut total = 0.0;
        for &l in &ids {
            let m: Vec<usize> = (0..n).filter(|&a| lab(a) == l).collect();
            // Kruskal
            let mut edges = Vec::new();
            for (p, &a) in m.iter().enumerate() {
                for &b in &m[p + 1..] {
                    edges.push((mrd(a, b), a, b));
                }
            }
            edges.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut comp: Vec<usize> = (0..n).collect();
            let mut spars = 0.0f64;
            for (w, a, b) in edges {
                let (ca, cb) = (comp[a], comp[b]);
                if ca != cb {
                    spars = spars.max(w);
                    for c in comp.iter_mut() {
                        if *c == cb {
                            *c = ca;
                        }
                    }
                }
            }
            let mut sep = f64::INFINITY;
            for &a in &m {
                for b in (0..n).filter(|&b| lab(b) != l) {
                    sep = sep.min(mrd(a, b));
                }
            }
            total += m.len() as f64 * (sep - spars) / sep.max(spars);
        }
        total / n as f64
    }

    fn random_instance(seed: u64) -> (Array2<f64>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(6..100);
        let dim = rng.random_range(1..5);
        let k = rng.random_range(2..4);
        let x = Array2::from_shape_fn((n, dim), |_| rng.random::<f64>());
        let mut labels: Vec<Label> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.1 {
                    NOISE
                } else {
                    rng.random_range(0..k as Label)
                }
            })
            .collect();
        for (i, l) in labels.iter_mut().take(2 * k).enumerate() {
            *l = (i / 2) as Label;
        }
        (x, labels)
    }

    #[test]
    fn kdbcv_matches_transcription() {
        for seed in 0..60u64 {
            let (x, labels) = random_instance(seed);
            let got = kdbcv(x.view(), &set(&labels)).unwrap();
            let want = kdbcv_oracle(&x, &labels);
            assert!((got - want).abs() < 1e-9, "seed {seed}: {got} vs {want}");
        }
    }

    #[test]
    fn kdbcv_bounded() {
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(4..30);
            let x = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>());
            let mut labels: Vec<Label> = (0..n).map(|_| rng.random_range(0..2)).collect();
            labels[..4].copy_from_slice(&[0, 0, 1, 1]);
            let v = kdbcv(x.view(), &set(&labels)).unwrap();
            assert!((-1.0..=1.0).contains(&v), "seed {seed}: {v}");
        }
    }

    #[test]
    fn kdbcv_prefers_true_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((80, 2), |(i, _)| (i / 40) as f64 * 10.0 + rng.random::<f64>() * 0.3);
        let truth: Vec<Label> = (0..80).map(|i| (i / 40) as Label).collect();
        let random: Vec<Label> = (0..80).map(|i| (i % 2) as Label).collect();
        let good = kdbcv(x.view(), &set(&truth)).unwrap();
        assert!(good > 0.0);
        assert!(good >= kdbcv(x.view(), &set(&random)).unwrap());
    }

    #[test]
    fn permutation_invariance() {
        let (x, labels) = random_instance(3);
        let n = x.nrows();
        let perm: Vec<usize> = (0..n).rev().collect();
        let xp = Array2::from_shape_fn(x.dim(), |(i, d)| x[[perm[i], d]]);
        let lp: Vec<Label> = perm.iter().map(|&i| labels[i]).collect();
        let (a, b) = (set(&labels), set(&lp));
        assert!((kdbcv(x.view(), &a).unwrap() - kdbcv(xp.view(), &b).unwrap()).abs() < 1e-12);
        assert!((cdr(x.view(), &a).unwrap() - cdr(xp.view(), &b).unwrap()).abs() < 1e-12);
    }
}
