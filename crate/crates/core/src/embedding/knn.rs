use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::{EmbedError, Result};

const SMOOTH_K_TOLERANCE: f64 = 1e-9;
const MIN_K_DIST_SCALE: f64 = 1e-3;

/// Exact k-nearest neighbours plus the per-point bandwidths of the fuzzy set.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    /// `n×k`, row-sorted by ascending distance (ties by index).
    pub knn_indices: Array2<usize>,
    pub knn_dists: Array2<f64>,
    /// Distance to the nearest neighbour.
    pub rho: Vec<f64>,
    /// Bandwidth solving the `log2(k)` normalisation.
    pub sigma: Vec<f64>,
}

impl NeighborGraph {
    pub fn n_points(&self) -> usize {
        self.rho.len()
    }

    pub fn k(&self) -> usize {
        self.knn_indices.ncols()
    }

    /// `exp(-max(0, d - rho_i) / sigma_i)` for the `slot`-th neighbour of `i`.
    pub fn membership(&self, i: usize, slot: usize) -> f64 {
        let d = self.knn_dists[[i, slot]];
        (-(d - self.rho[i]).max(0.0) / self.sigma[i]).exp()
    }
}

/// Brute-force exact Euclidean kNN (self excluded), then a bisection for
/// each point's `sigma` so that `Σ_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k)`.
pub fn knn_graph(x: ArrayView2<'_, f64>, k: usize) -> Result<NeighborGraph> {
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(EmbedError::TooManyNeighbors { k, n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    let contiguous = x.as_standard_layout();
    let rows: Vec<&[f64]> = contiguous
        .rows()
        .into_iter()
        .map(|r| r.to_slice().expect("standard layout"))
        .collect();

    let neighbours: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |buf: &mut Vec<(f64, usize)>, i| {
                buf.clear();
                let xi = rows[i];
                for (j, xj) in rows.iter().enumerate() {
                    if j != i {
                        buf.push((crate::distance::sq_euclidean_slice(xi, xj), j));
                    }
                }
                let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                buf.select_nth_unstable_by(k - 1, cmp);
                let mut top = buf[..k].to_vec();
                top.sort_unstable_by(cmp);
                top.iter().map(|&(d2, j)| (d2.sqrt(), j)).collect()
            },
        )
        .collect();

    let mut knn_indices = Array2::zeros((n, k));
    let mut knn_dists = Array2::zeros((n, k));
    for (i, row) in neighbours.iter().enumerate() {
        for (s, &(d, j)) in row.iter().enumerate() {
            knn_indices[[i, s]] = j;
            knn_dists[[i, s]] = d;
        }
    }
    let (rho, sigma) = smooth_knn(&knn_dists);
    Ok(NeighborGraph {
        knn_indices,
        knn_dists,
        rho,
        sigma,
    })
}

fn smooth_knn(dists: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let k = dists.ncols();
    let target = (k as f64).log2();
    let global_mean = dists.mean().unwrap_or(0.0);
    let mut rho = Vec::with_capacity(dists.nrows());
    let mut sigma = Vec::with_capacity(dists.nrows());
    for row in dists.rows() {
        let r = row[0];
        let psum = |s: f64| -> f64 { row.iter().map(|&d| (-(d - r).max(0.0) / s).exp()).sum() };
        let (mut lo, mut hi, mut mid) = (0.0f64, f64::INFINITY, 1.0f64);
        for _ in 0..256 {
            let p = psum(mid);
            if (p - target).abs() < SMOOTH_K_TOLERANCE {
                break;
            }
            if p > target {
                hi = mid;
                mid = (lo + hi) / 2.0;
            } else {
                lo = mid;
                mid = if hi.is_infinite() { mid * 2.0 } else { (lo + hi) / 2.0 };
            }
        }
        let mean_d = row.mean().unwrap_or(0.0);
        let floor = if r > 0.0 {
            MIN_K_DIST_SCALE * mean_d
        } else {
            MIN_K_DIST_SCALE * global_mean
        };
        rho.push(r);
        sigma.push(mid.max(floor).max(f64::MIN_POSITIVE));
    }
    (rho, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn collinear_nearest_neighbour() {
        let x = array![[0.0], [1.0], [3.0]];
        let g = knn_graph(x.view(), 1).unwrap();
        assert_eq!(g.knn_indices.column(0).to_vec(), vec![1, 0, 1]);
        assert_eq!(g.knn_dists.column(0).to_vec(), vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn k_must_be_below_n() {
        let x = array![[0.0], [1.0], [3.0]];
        assert!(matches!(
            knn_graph(x.view(), 3),
            Err(EmbedError::TooManyNeighbors { k: 3, n: 3 })
        ));
    }

    #[test]
    fn duplicates_give_zero_rho() {
        let x = array![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 3.0]];
        let g = knn_graph(x.view(), 3).unwrap();
        assert_eq!(g.knn_dists[[0, 0]], 0.0);
        assert_eq!(g.rho[0], 0.0);
        assert!(g.sigma[0] > 0.0);
        let s: f64 = (0..3).map(|j| g.membership(0, j)).sum();
        assert!((s - 3f64.log2()).abs() < 1e-5);
    }

    fn random_points(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
    }

    #[test]
    fn matches_full_sort_oracle() {
        let x = random_points(100, 4, 11);
        let g = knn_graph(x.view(), 10).unwrap();
        for i in 0..100 {
            let mut all: Vec<(f64, usize)> = (0..100)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = x
                        .row(i)
                        .iter()
                        .zip(x.row(j).iter())
                        .map(|(a, b)| (a - b).powi(2))
                        .sum();
                    (d.sqrt(), j)
                })
                .collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut expect: Vec<usize> = all[..10].iter().map(|p| p.1).collect();
            let mut got = g.knn_indices.row(i).to_vec();
            expect.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn normalisation_holds_per_point() {
        let x = random_points(300, 6, 3);
        for k in [5, 15, 20] {
            let g = knn_graph(x.view(), k).unwrap();
            let target = (k as f64).log2();
            for i in 0..300 {
                let s: f64 = (0..k).map(|j| g.membership(i, j)).sum();
                assert!((s - target).abs() < 1e-5, "k={k} i={i} sum={s}");
                assert!(g.sigma[i] > 0.0);
                assert_eq!(g.rho[i], g.knn_dists[[i, 0]]);
            }
            for row in g.knn_dists.rows() {
                assert!(row.windows(2).into_iter().all(|w| w[0] <= w[1]));
            }
        }
    }
}
