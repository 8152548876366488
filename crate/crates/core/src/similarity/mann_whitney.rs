use statrs::distribution::{ContinuousCDF, Normal};

use super::{Result, SimilarityError};

/// Largest smaller sample, and largest combined size, for the exact test.
const EXACT_MAX_SMALL: usize = 8;
const EXACT_MAX_TOTAL: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MannWhitney {
    /// `U` of the first sample: pairs `(a, b)` with `a > b`, ties counting ½.
    pub u: f64,
    pub p_two_sided: f64,
    pub exact: bool,
}

/// Two-sided Mann-Whitney U test with mid-ranks for ties.
///
/// Small samples get the exact permutation p-value over all splits of the
/// pooled ranks; larger ones the tie-corrected normal approximation with
/// continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(SimilarityError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(SimilarityError::NonFinite);
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    // doubled mid-ranks stay integral
    let mut rank2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let mid2 = (i + 1 + j + 1) as u64;
        rank2[i..=j].iter_mut().for_each(|r| *r = mid2);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let r1_2: u64 = pooled.iter().zip(&rank2).filter(|(p, _)| p.1).map(|(_, &r)| r).sum();
    let u = r1_2 as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;
    let mean = (n1 * n2) as f64 / 2.0;

    if n1.min(n2) <= EXACT_MAX_SMALL && n <= EXACT_MAX_TOTAL {
        let p = exact_p(&rank2, n1, r1_2);
        return Ok(MannWhitney {
            u,
            p_two_sided: p,
            exact: true,
        });
    }

    let (nf, n1f, n2f) = (n as f64, n1 as f64, n2 as f64);
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * (1.0 - normal.cdf(z))).min(1.0)
    };
    Ok(MannWhitney {
        u,
        p_two_sided: p,
        exact: false,
    })
}

/// Fraction of size-`k` subsets whose doubled rank sum lies at least as far
/// from its mean as `observed`.
fn exact_p(rank2: &[u64], k: usize, observed: u64) -> f64 {
    let max_sum: u64 = rank2.iter().sum();
    let width = max_sum as usize + 1;
    // ways[c][s]: subsets of c items with doubled rank sum s
    let mut ways = vec![vec![0.0f64; width]; k + 1];
    ways[0][0] = 1.0;
    for &r in rank2 {
        let r = r as usize;
        for c in (1..=k).rev() {
            let (lo, hi) = ways.split_at_mut(c);
            let (prev, cur) = (&lo[c - 1], &mut hi[0]);
            for s in (r..width).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    // the mean of the doubled rank sum is k·(n+1)
    let n = rank2.len() as i64;
    let centre2 = k as i64 * (n + 1);
    let dev = |s: i64| (s - centre2).abs();
    let obs_dev = dev(observed as i64);
    let (mut extreme, mut total) = (0.0, 0.0);
    for (s, &w) in ways[k].iter().enumerate() {
        total += w;
        if dev(s as i64) >= obs_dev {
            extreme += w;
        }
    }
    (extreme / total).min(1.0)
}
