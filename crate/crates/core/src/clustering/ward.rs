use ndarray::ArrayView2;

use super::{check_k, Result};
use crate::distance::{rows, sq_euclidean_slice};
use crate::partition::{ClusterSet, Label, Provenance};

/// One agglomeration step. Clusters `0..n` are the input points; the merge at
/// position `m` creates cluster `n + m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    /// Increase in within-cluster sum of squares caused by the merge.
    pub height: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    n_points: usize,
    /// Sorted by height, `n − 1` entries.
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Applies the lowest `n − k` merges.
    pub fn cut(&self, k: usize) -> Result<ClusterSet> {
        let n = self.n_points;
        if k == 0 || k > n {
            return Err(super::ClusterError::InvalidK { k, n });
        }
        let mut uf = UnionFind::new(2 * n);
        for (m, merge) in self.merges.iter().take(n - k).enumerate() {
            uf.union(merge.a, n + m);
            uf.union(merge.b, n + m);
        }
        let roots: Vec<Label> = (0..n).map(|i| uf.find(i) as Label).collect();
        Ok(ClusterSet::canonical(roots, Provenance::Ward { k }))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Ward's criterion `Δ = nᵢnⱼ/(nᵢ+nⱼ)·‖cᵢ − cⱼ‖²`.
fn delta(ca: &[f64], na: usize, cb: &[f64], nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    na * nb / (na + nb) * sq_euclidean_slice(ca, cb)
}

/// Agglomerative Ward clustering by nearest-neighbour chain, cut at `k`.
pub fn ward(x: ArrayView2<'_, f64>, k: usize) -> Result<(ClusterSet, Dendrogram)> {
    check_k(&x, k)?;
    let dendrogram = ward_tree(x)?;
    let partition = dendrogram.cut(k)?;
    Ok((partition, dendrogram))
}

/// Full Ward dendrogram.
pub fn ward_tree(x: ArrayView2<'_, f64>) -> Result<Dendrogram> {
    super::check_finite(&x)?;
    let n = x.nrows();
    let mut centroid = rows(x);
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // raw merges between slot indices; a merged cluster reuses the slot of `b`
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = n;

    while remaining > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let top = *chain.last().expect("non-empty chain");
        let prev = chain.len().checked_sub(2).map(|p| chain[p]);
        let mut best = (usize::MAX, f64::INFINITY);
        // prefer the chain predecessor on ties so reciprocal pairs terminate
        if let Some(p) = prev {
            best = (p, delta(&centroid[top], size[top], &centroid[p], size[p]));
        }
        for j in 0..n {
            if !active[j] || j == top {
                continue;
            }
            let d = delta(&centroid[top], size[top], &centroid[j], size[j]);
            if d < best.1 || (d == best.1 && Some(best.0) != prev && j < best.0) {
                best = (j, d);
            }
        }
        let (nn, height) = best;
        if Some(nn) == prev {
            chain.pop();
            chain.pop();
            let (a, b) = (top.min(nn), top.max(nn));
            let (na, nb) = (size[a] as f64, size[b] as f64);
            let merged: Vec<f64> = centroid[a]
                .iter()
                .zip(&centroid[b])
                .map(|(p, q)| (na * p + nb * q) / (na + nb))
                .collect();
            raw.push((a, b, height));
            centroid[b] = merged;
            size[b] += size[a];
            active[a] = false;
            remaining -= 1;
        } else {
            chain.push(nn);
        }
    }

    // stable sort keeps children ahead of parents when heights tie
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&p, &q| raw[p].2.total_cmp(&raw[q].2));
    let mut uf = UnionFind::new(n);
    // slot → current cluster id
    let mut id_of_root: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; 2 * n];
    let mut merges = Vec::with_capacity(raw.len());
    for (m, &r) in order.iter().enumerate() {
        let (a, b, height) = raw[r];
        let (ra, rb) = (uf.find(a), uf.find(b));
        let (ia, ib) = (id_of_root[ra], id_of_root[rb]);
        let new_id = n + m;
        let s = sizes[ia] + sizes[ib];
        sizes[new_id] = s;
        uf.union(ra, rb);
        let root = uf.find(ra);
        id_of_root[root] = new_id;
        merges.push(Merge {
            a: ia.min(ib),
            b: ia.max(ib),
            height,
            size: s,
        });
    }
    Ok(Dendrogram { n_points: n, merges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_example() {
        let x = array![[0.0], [1.0], [10.0]];
        let (p, d) = ward(x.view(), 2).unwrap();
        assert_eq!(d.merges()[0], Merge { a: 0, b: 1, height: 0.5, size: 2 });
        // second merge: (2·1/3)·(10 − 0.5)² = 60.1666…
        assert!((d.merges()[1].height - 2.0 / 3.0 * 9.5f64.powi(2)).abs() < 1e-12);
        assert_eq!(d.merges()[1].a, 2);
        assert_eq!(d.merges()[1].b, 3);
        assert_eq!(p.labels(), &[0, 0, 1]);
    }

    #[test]
    fn k_equals_n_is_singletons() {
        let x = array![[0.0], [1.0], [10.0], [4.0]];
        let (p, _) = ward(x.view(), 4).unwrap();
        assert_eq!(p.labels(), &[0, 1, 2, 3]);
    }

    /// Naive O(n³) agglomeration with the Lance-Williams update for Ward.
    fn lance_williams(x: &Array2<f64>) -> Vec<f64> {
        let n = x.nrows();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                d[i][j] = x
                    .row(i)
                    .iter()
                    .zip(x.row(j).iter())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    / 2.0;
            }
        }
        let mut size = vec![1usize; n];
        let mut alive = vec![true; n];
        let mut heights = Vec::new();
        for _ in 1..n {
            let mut best = (0, 0, f64::INFINITY);
            for i in 0..n {
                for j in (i + 1)..n {
                    if alive[i] && alive[j] && d[i][j] < best.2 {
                        best = (i, j, d[i][j]);
                    }
                }
            }
            let (i, j, h) = best;
            heights.push(h);
            let (ni, nj) = (size[i] as f64, size[j] as f64);
            for k in 0..n {
                if alive[k] && k != i && k != j {
                    let nk = size[k] as f64;
                    let v = ((nk + ni) * d[k][i] + (nk + nj) * d[k][j] - nk * d[i][j]) / (nk + ni + nj);
                    d[k][i] = v;
                    d[i][k] = v;
                }
            }
            size[i] += size[j];
            alive[j] = false;
        }
        heights
    }

    #[test]
    fn matches_lance_williams_oracle() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2..60);
            let x = Array2::from_shape_fn((n, 3), |_| rng.random::<f64>());
            let d = ward_tree(x.view()).unwrap();
            let expect = lance_williams(&x);
            for (got, want) in d.heights().iter().zip(&expect) {
                assert!((got - want).abs() < 1e-9, "seed {seed}: {got} vs {want}");
            }
            assert!(d.heights().windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(d.merges().last().unwrap().size, n);
        }
    }

    #[test]
    fn cut_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((40, 2), |_| rng.random::<f64>());
        let d = ward_tree(x.view()).unwrap();
        for k in 1..=40 {
            assert_eq!(d.cut(k).unwrap().n_clusters(), k);
        }
    }
}
