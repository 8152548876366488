//! Stochastic gradient descent on the fuzzy-set cross-entropy with negative
//! sampling.

use std::collections::HashSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::curve::psi;
use super::fuzzy::FuzzyGraph;

const GRAD_CLIP: f64 = 4.0;
const REPULSION_EPS: f64 = 1e-3;
const PROB_FLOOR: f64 = 1e-12;
const CE_STREAM: u64 = 0xce;

/// Settings consumed by [`sgd_layout`]; a subset of `EmbeddingParams`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SgdSettings {
    pub a: f64,
    pub b: f64,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// Optimises `layout` in place.
///
/// Each directed edge is sampled every `max_w / w` epochs; each sample pulls
/// both endpoints together and pushes the head away from
/// `negative_sample_rate` uniformly drawn points. The learning rate decays
/// linearly to zero.
pub(crate) fn sgd_layout(graph: &FuzzyGraph, layout: &mut Array2<f64>, s: &SgdSettings) {
    let n = layout.nrows();
    let dim = layout.ncols();
    if n < 2 || graph.n_edges() == 0 || s.n_epochs == 0 {
        return;
    }
    let mut y: Vec<f64> = layout.iter().copied().collect();

    let max_w = graph.edges().iter().fold(0.0f64, |m, e| m.max(e.2));
    let n_epochs = s.n_epochs as f64;
    // both directions of every undirected edge, as in a symmetric sparse matrix
    let mut heads = Vec::with_capacity(2 * graph.n_edges());
    let mut tails = Vec::with_capacity(2 * graph.n_edges());
    let mut eps = Vec::with_capacity(2 * graph.n_edges());
    for &(i, j, w) in graph.edges() {
        let per = max_w / w;
        // edges too weak to be sampled even once are dropped
        if w * n_epochs < max_w {
            continue;
        }
        for (h, t) in [(i, j), (j, i)] {
            heads.push(h);
            tails.push(t);
            eps.push(per);
        }
    }
    let neg_rate = s.negative_sample_rate.max(1) as f64;
    let eps_neg: Vec<f64> = eps.iter().map(|e| e / neg_rate).collect();
    let mut next_sample = eps.clone();
    let mut next_neg = eps_neg.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let (a, b) = (s.a, s.b);
    let mut delta = vec![0.0; dim];

    for epoch in 0..s.n_epochs {
        let alpha = s.learning_rate * (1.0 - epoch as f64 / n_epochs);
        let e_now = epoch as f64;
        for e in 0..heads.len() {
            if next_sample[e] > e_now {
                continue;
            }
            let (j, k) = (heads[e], tails[e]);
            let (oj, ok) = (j * dim, k * dim);
            let mut dist_sq = 0.0;
            for d in 0..dim {
                delta[d] = y[oj + d] - y[ok + d];
                dist_sq += delta[d] * delta[d];
            }
            if dist_sq > 0.0 {
                let coeff = -2.0 * a * b * dist_sq.powf(b - 1.0) / (a * dist_sq.powf(b) + 1.0);
                for d in 0..dim {
                    let g = clip(coeff * delta[d]) * alpha;
                    y[oj + d] += g;
                    y[ok + d] -= g;
                }
            }
            next_sample[e] += eps[e];

            let n_neg = ((e_now - next_neg[e]) / eps_neg[e]).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let k = rng.random_range(0..n);
                if k == j {
                    continue;
                }
                let ok = k * dim;
                let mut dist_sq = 0.0;
                for d in 0..dim {
                    delta[d] = y[oj + d] - y[ok + d];
                    dist_sq += delta[d] * delta[d];
                }
                if dist_sq > 0.0 {
                    let coeff = 2.0 * b / ((REPULSION_EPS + dist_sq) * (a * dist_sq.powf(b) + 1.0));
                    for d in 0..dim {
                        y[oj + d] += clip(coeff * delta[d]) * alpha;
                    }
                } else {
                    for d in 0..dim {
                        y[oj + d] += GRAD_CLIP * alpha;
                    }
                }
            }
            next_neg[e] += n_neg as f64 * eps_neg[e];
        }
    }

    for (dst, src) in layout.iter_mut().zip(y) {
        *dst = src;
    }
}

/// Cross-entropy between the graph memberships and the layout's `ψ`
/// memberships. Edge terms are exact; the non-edge term is estimated from
/// `negative_sample_rate × |edges|` uniformly drawn non-adjacent pairs.
pub(crate) fn sampled_cross_entropy(
    graph: &FuzzyGraph,
    layout: &Array2<f64>,
    a: f64,
    b: f64,
    negative_sample_rate: usize,
    seed: u64,
) -> f64 {
    let n = layout.nrows();
    if n < 2 {
        return 0.0;
    }
    let dist = |i: usize, j: usize| -> f64 {
        layout
            .row(i)
            .iter()
            .zip(layout.row(j).iter())
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    let nu = |i: usize, j: usize| psi(dist(i, j), a, b).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);

    let mut ce = 0.0;
    for &(i, j, mu) in graph.edges() {
        let v = nu(i, j);
        ce += mu * (mu / v).ln();
        if mu < 1.0 {
            ce += (1.0 - mu) * ((1.0 - mu) / (1.0 - v)).ln();
        }
    }

    let total_pairs = n * (n - 1) / 2;
    let non_edges = total_pairs.saturating_sub(graph.n_edges());
    if non_edges == 0 {
        return ce;
    }
    let edge_set: HashSet<(usize, usize)> = graph.edges().iter().map(|e| (e.0, e.1)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CE_STREAM);
    let m = (negative_sample_rate.max(1) * graph.n_edges()).max(1);
    let mut acc = 0.0;
    let mut drawn = 0usize;
    let mut attempts = 0usize;
    while drawn < m && attempts < 20 * m {
        attempts += 1;
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || edge_set.contains(&(i.min(j), i.max(j))) {
            continue;
        }
        acc += -(1.0 - nu(i, j)).ln();
        drawn += 1;
    }
    if drawn > 0 {
        ce += acc * non_edges as f64 / drawn as f64;
    }
    ce
}
