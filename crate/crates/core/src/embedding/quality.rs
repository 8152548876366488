//! Rank-based neighbourhood-preservation scores of an embedding.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EmbedError, Result};
use crate::distance::sq_euclidean_slice;

fn rows(x: &ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    x.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn check_shapes(x: &ArrayView2<'_, f64>, e: &ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() != e.nrows() {
        return Err(EmbedError::ShapeMismatch(format!(
            "{} original points, {} embedded",
            x.nrows(),
            e.nrows()
        )));
    }
    if x.iter().chain(e.iter()).any(|v| !v.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    Ok(())
}

/// Neighbour order of point `i` (self excluded), ties broken by index.
fn order_from(pts: &[Vec<f64>], i: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (sq_euclidean_slice(&pts[i], p), j))
        .collect();
    d.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().map(|p| p.1).collect()
}

/// Penalises points that enter the `k`-neighbourhood in `to` without being
/// neighbours in `from`, by their rank in `from`.
fn rank_penalty(from: ArrayView2<'_, f64>, to: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    check_shapes(&from, &to)?;
    let n = from.nrows();
    if k == 0 || 2 * k >= n {
        return Err(EmbedError::InvalidParameter(format!(
            "neighbourhood size {k} must be positive and below n/2 = {}",
            n as f64 / 2.0
        )));
    }
    let pf = rows(&from);
    let pt = rows(&to);
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let of = order_from(&pf, i);
            let mut rank = vec![0usize; n];
            for (r, &j) in of.iter().enumerate() {
                rank[j] = r + 1;
            }
            let ot = order_from(&pt, i);
            ot[..k]
                .iter()
                .map(|&j| rank[j])
                .filter(|&r| r > k)
                .map(|r| (r - k) as f64)
                .sum::<f64>()
        })
        .sum();
    let (nf, kf) = (n as f64, k as f64);
    Ok(1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * total)
}

/// Fraction of embedded neighbourhoods that are genuine; 1.0 when no
/// intruders appear among the `k` nearest embedded neighbours.
pub fn trustworthiness(x: ArrayView2<'_, f64>, e: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    rank_penalty(x, e, k)
}

/// Mirror of [`trustworthiness`]: penalises original neighbours that the
/// embedding pushes out.
pub fn continuity(x: ArrayView2<'_, f64>, e: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    rank_penalty(e, x, k)
}

/// Co-ranking summary over a seeded subsample of at most `sample_size` points.
///
/// `Q_NX(K)` is the fraction of `K`-neighbourhoods shared by both spaces. The
/// split `K*` maximises `LCMC(K) = Q_NX(K) − K/(m−1)`; `Qlocal` averages
/// `Q_NX` over `1..=K*` and `Qglobal` over `K*+1..=m−2`.
pub fn coranking_q(
    x: ArrayView2<'_, f64>,
    e: ArrayView2<'_, f64>,
    sample_size: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_shapes(&x, &e)?;
    let n = x.nrows();
    let mut idx: Vec<usize> = if n > sample_size {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&mut rng, n, sample_size).into_vec()
    } else {
        (0..n).collect()
    };
    idx.sort_unstable();
    let m = idx.len();
    if m < 3 {
        return Err(EmbedError::TooFewPoints { need: 3, got: m });
    }
    let px: Vec<Vec<f64>> = idx.iter().map(|&i| x.row(i).to_vec()).collect();
    let pe: Vec<Vec<f64>> = idx.iter().map(|&i| e.row(i).to_vec()).collect();

    // a pair with ranks (r, ρ) counts toward every K ≥ max(r, ρ)
    let counts: Vec<u64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let ox = order_from(&px, i);
            let oe = order_from(&pe, i);
            let mut rank_e = vec![0usize; m];
            for (r, &j) in oe.iter().enumerate() {
                rank_e[j] = r + 1;
            }
            let mut c = vec![0u64; m];
            for (r, &j) in ox.iter().enumerate() {
                c[(r + 1).max(rank_e[j])] += 1;
            }
            c
        })
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let mf = m as f64;
    let mut q_nx = vec![0.0; m];
    let mut cum = 0u64;
    for k in 1..m {
        cum += counts[k];
        q_nx[k] = cum as f64 / (k as f64 * mf);
    }
    let last = (m - 2).max(1);
    let mut k_star = 1;
    let mut best = f64::NEG_INFINITY;
    for (k, &q) in q_nx.iter().enumerate().take(last + 1).skip(1) {
        let lcmc = q - k as f64 / (mf - 1.0);
        if lcmc > best {
            best = lcmc;
            k_star = k;
        }
    }
    let mean = |r: std::ops::RangeInclusive<usize>| {
        let len = r.clone().count();
        r.map(|k| q_nx[k]).sum::<f64>() / len as f64
    };
    let q_local = mean(1..=k_star);
    let q_global = if k_star < last {
        mean(k_star + 1..=last)
    } else {
        mean(k_star + 1..=m - 1)
    };
    Ok((q_local, q_global))
}

/// `sample_pairs` uniformly drawn unordered pairs `i ≠ j` with their distance
/// in both spaces.
pub fn shepard_pairs(
    x: ArrayView2<'_, f64>,
    e: ArrayView2<'_, f64>,
    sample_pairs: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    check_shapes(&x, &e)?;
    let n = x.nrows();
    if sample_pairs == 0 {
        return Err(EmbedError::InvalidParameter("sample_pairs must be positive".into()));
    }
    if n < 2 {
        return Err(EmbedError::TooFewPoints { need: 2, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = |a: &ArrayView2<'_, f64>, i: usize, j: usize| {
        a.row(i)
            .iter()
            .zip(a.row(j).iter())
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    Ok((0..sample_pairs)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (dist(&x, i, j), dist(&e, i, j))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
    }

    fn shuffled(x: &Array2<f64>, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perm = sample(&mut rng, x.nrows(), x.nrows()).into_vec();
        Array2::from_shape_fn(x.dim(), |(i, d)| x[[perm[i], d]])
    }

    #[test]
    fn identity_is_perfect() {
        let x = random(60, 4, 1);
        assert_eq!(trustworthiness(x.view(), x.view(), 5).unwrap(), 1.0);
        assert_eq!(continuity(x.view(), x.view(), 5).unwrap(), 1.0);
        let (ql, qg) = coranking_q(x.view(), x.view(), 2000, 0).unwrap();
        assert_eq!((ql, qg), (1.0, 1.0));
    }

    #[test]
    fn k_must_be_below_half_n() {
        let x = random(10, 2, 1);
        assert!(trustworthiness(x.view(), x.view(), 5).is_err());
        assert!(trustworthiness(x.view(), x.view(), 4).is_ok());
        assert!(continuity(x.view(), x.view(), 0).is_err());
    }

    #[test]
    fn hand_counted_continuity() {
        // X on a line: 0, 1, 3, 7, 15, 31, 63. E swaps points 0 and 2.
        let x = array![[0.0], [1.0], [3.0], [7.0], [15.0], [31.0], [63.0]];
        let e = array![[3.0], [1.0], [0.0], [7.0], [15.0], [31.0], [63.0]];
        // K = 1. X-nearest: 0→1, 1→0, 2→1, 3→2, rest → previous point.
        // E-nearest: 0→1 (d 2), 1→2 (d 1), 2→1, 3→0 (d 4), 4→3, 5→4, 6→5.
        // Continuity misses: point 1 loses 0 (E-rank 2), point 3 loses 2 (E-rank 3).
        let penalty = (2 - 1) + (3 - 1);
        let (n, k) = (7.0, 1.0);
        let expect = 1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty as f64;
        let got = continuity(x.view(), e.view(), 1).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!(got < 1.0);
        // trustworthiness: intruders 1→2 (X-rank 2) and 3→0 (X-rank 3)
        let t = trustworthiness(x.view(), e.view(), 1).unwrap();
        assert!((t - expect).abs() < 1e-12);
    }

    #[test]
    fn shuffled_rows_are_untrustworthy() {
        for seed in 0..100 {
            let x = random(100, 3, seed);
            let e = shuffled(&x, seed + 1000);
            let t = trustworthiness(x.view(), e.view(), 5).unwrap();
            assert!(t < 0.7, "seed {seed}: {t}");
        }
    }

    #[test]
    fn shuffled_rows_coranking() {
        // Q_NX of independent rankings is ≈ K/(m−1): Qlocal is small, while
        // Qglobal averages the upper part of that ramp and cannot fall below
        // about one half.
        for seed in 0..100 {
            let x = random(200, 3, seed);
            let e = shuffled(&x, seed + 1000);
            let (ql, qg) = coranking_q(x.view(), e.view(), 2000, seed).unwrap();
            assert!(ql < 0.5, "seed {seed}: Qlocal {ql}");
            assert!(qg > 0.45, "seed {seed}: Qglobal {qg}");
        }
    }

    #[test]
    fn coranking_subsamples_deterministically() {
        let x = random(300, 3, 4);
        let e = shuffled(&x, 5);
        let a = coranking_q(x.view(), e.view(), 50, 9).unwrap();
        assert_eq!(a, coranking_q(x.view(), e.view(), 50, 9).unwrap());
        assert!(coranking_q(x.view(), e.view(), 2, 9).is_err());
    }

    #[test]
    fn shepard_lines() {
        let x = random(30, 3, 2);
        for (a, b) in shepard_pairs(x.view(), x.view(), 100, 3).unwrap() {
            assert_eq!(a, b);
            assert!(a > 0.0);
        }
        let y = x.mapv(|v| 2.0 * v);
        for (a, b) in shepard_pairs(x.view(), y.view(), 100, 3).unwrap() {
            assert!((b - 2.0 * a).abs() < 1e-12);
        }
        assert_eq!(
            shepard_pairs(x.view(), y.view(), 10, 3).unwrap(),
            shepard_pairs(x.view(), y.view(), 10, 3).unwrap()
        );
        assert!(shepard_pairs(x.view(), y.view(), 0, 3).is_err());
    }
}
