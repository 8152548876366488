//! Agreement between two labelings of the same points, and a rank test for
//! comparing score distributions.

mod join;
mod mann_whitney;

pub use join::{compare_datasets, join_labels, JoinedLabels};
pub use mann_whitney::{mann_whitney_u, MannWhitney};

use std::collections::HashMap;

use thiserror::Error;

use crate::partition::{ClusterSet, Label, Provenance, NOISE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("labelings differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("no points left to compare")]
    NothingToCompare,
    #[error("non-finite value in sample")]
    NonFinite,
}

pub type Result<T, E = SimilarityError> = std::result::Result<T, E>;

/// How NOISE points enter a comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseMode {
    /// NOISE is one more label.
    #[default]
    AsLabel,
    /// Points that are NOISE in either labeling are removed from both.
    Drop,
}

/// Counts `n_ij` of points labelled `i` in A and `j` in B.
#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn new(a: &[Label], b: &[Label]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(SimilarityError::LengthMismatch { a: a.len(), b: b.len() });
        }
        let index = |labels: &[Label]| {
            let mut ids: Vec<Label> = labels.to_vec();
            ids.sort_unstable();
            ids.dedup();
            let map: HashMap<Label, usize> = ids.iter().enumerate().map(|(i, &l)| (l, i)).collect();
            (ids.len(), map)
        };
        let (ra, ma) = index(a);
        let (rb, mb) = index(b);
        let mut counts = vec![vec![0u64; rb]; ra];
        for (x, y) in a.iter().zip(b) {
            counts[ma[x]][mb[y]] += 1;
        }
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..rb).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            n: a.len() as u64,
        })
    }
}

fn pairs(x: u64) -> f64 {
    (x as f64) * (x.saturating_sub(1) as f64) / 2.0
}

/// Applies [`NoiseMode`] to a pair of labelings.
pub fn prepare(a: &ClusterSet, b: &ClusterSet, mode: NoiseMode) -> Result<(Vec<Label>, Vec<Label>)> {
    if a.len() != b.len() {
        return Err(SimilarityError::LengthMismatch { a: a.len(), b: b.len() });
    }
    Ok(match mode {
        NoiseMode::AsLabel => (a.labels().to_vec(), b.labels().to_vec()),
        NoiseMode::Drop => a
            .labels()
            .iter()
            .zip(b.labels())
            .filter(|(x, y)| **x != NOISE && **y != NOISE)
            .map(|(x, y)| (*x, *y))
            .unzip(),
    })
}

/// Adjusted Rand index. Two labelings that are both a single cluster, or
/// both all singletons, score 1.
pub fn ari(a: &ClusterSet, b: &ClusterSet) -> Result<f64> {
    let t = ContingencyTable::new(a.labels(), b.labels())?;
    Ok(ari_from_table(&t))
}

fn ari_from_table(t: &ContingencyTable) -> f64 {
    let index: f64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sa: f64 = t.row_sums.iter().map(|&c| pairs(c)).sum();
    let sb: f64 = t.col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(t.n);
    if total == 0.0 {
        return 1.0;
    }
    // (index − sa·sb/total)/((sa + sb)/2 − sa·sb/total), cleared of fractions
    let num = 2.0 * (index * total - sa * sb);
    let den = (sa + sb) * total - 2.0 * sa * sb;
    if den == 0.0 {
        return 1.0;
    }
    num / den
}

/// Normalised mutual information `2·I/(H_A + H_B)` with natural logs; 1 when
/// both labelings are a single cluster.
pub fn nmi(a: &ClusterSet, b: &ClusterSet) -> Result<f64> {
    let t = ContingencyTable::new(a.labels(), b.labels())?;
    Ok(nmi_from_table(&t))
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn nmi_from_table(t: &ContingencyTable) -> f64 {
    if t.n == 0 {
        return 1.0;
    }
    let n = t.n as f64;
    let (ha, hb) = (entropy(&t.row_sums, n), entropy(&t.col_sums, n));
    if ha + hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (t.row_sums[i] as f64 * t.col_sums[j] as f64)).ln();
            }
        }
    }
    (2.0 * mi / (ha + hb)).clamp(0.0, 1.0)
}

/// `(1/N)·Σ_i max_j |a_i ∩ b_j|`: how well each cluster of A is contained in
/// a single cluster of B.
pub fn overlap_asym(a: &ClusterSet, b: &ClusterSet) -> Result<f64> {
    let t = ContingencyTable::new(a.labels(), b.labels())?;
    Ok(overlap_from_table(&t))
}

fn overlap_from_table(t: &ContingencyTable) -> f64 {
    if t.n == 0 {
        return 1.0;
    }
    let hits: u64 = t.counts.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    hits as f64 / t.n as f64
}

/// Mean of both asymmetric overlaps.
pub fn overlap_sym(a: &ClusterSet, b: &ClusterSet) -> Result<f64> {
    Ok((overlap_asym(a, b)? + overlap_asym(b, a)?) / 2.0)
}

/// All agreement measures for one pair of labelings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agreement {
    pub n: usize,
    pub overlap_ab: f64,
    pub overlap_ba: f64,
    pub overlap_sym: f64,
    pub nmi: f64,
    pub ari: f64,
}

pub fn agreement(a: &ClusterSet, b: &ClusterSet, mode: NoiseMode) -> Result<Agreement> {
    let (la, lb) = prepare(a, b, mode)?;
    if la.is_empty() {
        return Err(SimilarityError::NothingToCompare);
    }
    let t = ContingencyTable::new(&la, &lb)?;
    let tt = ContingencyTable::new(&lb, &la)?;
    let (ab, ba) = (overlap_from_table(&t), overlap_from_table(&tt));
    Ok(Agreement {
        n: la.len(),
        overlap_ab: ab,
        overlap_ba: ba,
        overlap_sym: (ab + ba) / 2.0,
        nmi: nmi_from_table(&t),
        ari: ari_from_table(&t),
    })
}

/// Wraps raw labels for the functions above.
pub fn labels(l: &[Label]) -> ClusterSet {
    ClusterSet::new(l.to_vec(), Provenance::External("labels".into()))
}
