//! Ensemble fusion: match every member to a base labeling, take the per-point
//! mode, and report the disagreement as an uncertainty percentage.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::partition::{ClusterSet, Label, Provenance, NOISE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NemiError {
    #[error("an ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),
    #[error("member {member} has {got} points, expected {expected}")]
    LengthMismatch { member: usize, expected: usize, got: usize },
    #[error("weight {index} is {value}; weights must be positive and finite")]
    BadWeight { index: usize, value: f64 },
    #[error("overlap of two empty sets is undefined")]
    EmptySets,
    #[error("base {base} out of range for {members} members")]
    BaseOutOfRange { base: usize, members: usize },
}

pub type Result<T, E = NemiError> = std::result::Result<T, E>;

/// Labelings of the same points plus per-point weights (cell volumes, or 1
/// for plain counts).
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    members: Vec<ClusterSet>,
    weights: Vec<f64>,
}

impl Ensemble {
    /// `weights = None` weighs every point equally.
    pub fn new(members: Vec<ClusterSet>, weights: Option<Vec<f64>>) -> Result<Self> {
        if members.len() < 2 {
            return Err(NemiError::TooFewMembers(members.len()));
        }
        let n = members[0].len();
        for (member, m) in members.iter().enumerate() {
            if m.len() != n {
                return Err(NemiError::LengthMismatch {
                    member,
                    expected: n,
                    got: m.len(),
                });
            }
        }
        let weights = weights.unwrap_or_else(|| vec![1.0; n]);
        if weights.len() != n {
            return Err(NemiError::LengthMismatch {
                member: usize::MAX,
                expected: n,
                got: weights.len(),
            });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(NemiError::BadWeight { index, value });
        }
        Ok(Self { members, weights })
    }

    pub fn members(&self) -> &[ClusterSet] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NemiResult {
    pub base_id: usize,
    /// In the size-sorted label space of the base member.
    pub final_labels: ClusterSet,
    /// Percent of members disagreeing with the final label, per point.
    pub uncertainty: Vec<f64>,
    /// Each member's labels after matching to the base.
    pub matched: Vec<Vec<Label>>,
}

impl NemiResult {
    pub fn mean_uncertainty(&self) -> f64 {
        if self.uncertainty.is_empty() {
            return 0.0;
        }
        self.uncertainty.iter().sum::<f64>() / self.uncertainty.len() as f64
    }
}

/// Relabels clusters `0, 1, …` by decreasing size; equal sizes keep the order
/// of their old ids. NOISE is untouched.
pub fn sort_labels_by_size(partition: &ClusterSet) -> ClusterSet {
    let mut sizes: HashMap<Label, usize> = HashMap::new();
    for &l in partition.labels().iter().filter(|&&l| l != NOISE) {
        *sizes.entry(l).or_default() += 1;
    }
    let mut order: Vec<(Label, usize)> = sizes.into_iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let map: HashMap<Label, Label> = order.iter().enumerate().map(|(new, &(old, _))| (old, new as Label)).collect();
    let labels = partition
        .labels()
        .iter()
        .map(|&l| if l == NOISE { NOISE } else { map[&l] })
        .collect();
    ClusterSet::new(labels, partition.provenance.clone())
}

/// Weighted Jaccard overlap `w(a ∩ b)/w(a ∪ b)` of two index sets.
pub fn nemi_overlap(a: &[usize], b: &[usize], weights: &[f64]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(NemiError::EmptySets);
    }
    let mut in_a = HashMap::with_capacity(a.len());
    for &i in a {
        in_a.insert(i, ());
    }
    let mut b_sorted = b.to_vec();
    b_sorted.sort_unstable();
    b_sorted.dedup();
    let w = |i: usize| weights[i];
    let mut a_sorted = a.to_vec();
    a_sorted.sort_unstable();
    a_sorted.dedup();
    let total_a: f64 = a_sorted.iter().map(|&i| w(i)).sum();
    let total_b: f64 = b_sorted.iter().map(|&i| w(i)).sum();
    let inter: f64 = b_sorted.iter().filter(|i| in_a.contains_key(i)).map(|&i| w(i)).sum();
    Ok(inter / (total_a + total_b - inter))
}

/// Relabels `member` into `base`'s label space.
///
/// Label pairs are visited in decreasing weighted overlap (ties: lower base
/// label, then lower member label) and matched one-to-one. Member labels left
/// without a partner get fresh ids above the base's largest label. NOISE
/// stays NOISE.
pub fn match_to_base(base: &ClusterSet, member: &ClusterSet, weights: &[f64]) -> Vec<Label> {
    let mut inter: HashMap<(Label, Label), f64> = HashMap::new();
    let mut w_base: HashMap<Label, f64> = HashMap::new();
    let mut w_member: HashMap<Label, f64> = HashMap::new();
    for ((&a, &b), &w) in base.labels().iter().zip(member.labels()).zip(weights) {
        if a != NOISE {
            *w_base.entry(a).or_default() += w;
        }
        if b != NOISE {
            *w_member.entry(b).or_default() += w;
        }
        if a != NOISE && b != NOISE {
            *inter.entry((a, b)).or_default() += w;
        }
    }
    let mut pairs: Vec<(f64, Label, Label)> = inter
        .into_iter()
        .map(|((a, b), i)| (i / (w_base[&a] + w_member[&b] - i), a, b))
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut mapping: HashMap<Label, Label> = HashMap::new();
    let mut taken: HashMap<Label, ()> = HashMap::new();
    for (_, a, b) in pairs {
        if mapping.contains_key(&b) || taken.contains_key(&a) {
            continue;
        }
        mapping.insert(b, a);
        taken.insert(a, ());
    }
    let fresh = base.max_label().unwrap_or(NOISE).max(NOISE) + 1;
    let mut unmatched: Vec<Label> = w_member.keys().copied().filter(|l| !mapping.contains_key(l)).collect();
    unmatched.sort_unstable();
    for (l, new) in unmatched.into_iter().zip(fresh..) {
        mapping.insert(l, new);
    }
    member
        .labels()
        .iter()
        .map(|&l| if l == NOISE { NOISE } else { mapping[&l] })
        .collect()
}

/// Fuses the ensemble around member `base_id`.
///
/// Every label is first sorted by size. The final label of a point is the
/// most frequent matched label among those in the base's label space (ties
/// go to the base's own label, otherwise the smallest); points that are NOISE
/// in the base stay NOISE. Uncertainty is `100·(1 − agree/M)` where `agree`
/// counts members voting for the final label.
pub fn aggregate(ensemble: &Ensemble, base_id: usize) -> Result<NemiResult> {
    let m = ensemble.n_members();
    if base_id >= m {
        return Err(NemiError::BaseOutOfRange { base: base_id, members: m });
    }
    let sorted: Vec<ClusterSet> = ensemble.members.par_iter().map(sort_labels_by_size).collect();
    aggregate_sorted(&sorted, &ensemble.weights, base_id)
}

fn aggregate_sorted(sorted: &[ClusterSet], weights: &[f64], base_id: usize) -> Result<NemiResult> {
    let m = sorted.len();
    let base = &sorted[base_id];
    let matched: Vec<Vec<Label>> = sorted.par_iter().map(|s| match_to_base(base, s, weights)).collect();
    let n_base = base.max_label().map_or(0, |l| (l + 1) as usize);

    let n = base.len();
    let mut final_labels = Vec::with_capacity(n);
    let mut uncertainty = Vec::with_capacity(n);
    let mut votes = vec![0usize; n_base];
    for i in 0..n {
        let own = base.labels()[i];
        let (label, agree) = if own == NOISE {
            (NOISE, matched.iter().filter(|mm| mm[i] == NOISE).count())
        } else {
            votes.iter_mut().for_each(|v| *v = 0);
            for mm in &matched {
                let l = mm[i];
                if l != NOISE && (l as usize) < n_base {
                    votes[l as usize] += 1;
                }
            }
            let top = votes.iter().copied().max().unwrap_or(0);
            let label = if votes[own as usize] == top {
                own
            } else {
                votes.iter().position(|&v| v == top).expect("a maximum exists") as Label
            };
            (label, top)
        };
        final_labels.push(label);
        uncertainty.push(100.0 * (1.0 - agree as f64 / m as f64));
    }
    Ok(NemiResult {
        base_id,
        final_labels: ClusterSet::new(final_labels, Provenance::Nemi { base_id, members: m }),
        uncertainty,
        matched,
    })
}

/// Tries each candidate base (all members, or the first `cap`) and keeps the
/// one with the lowest mean uncertainty; ties go to the lower index. Also
/// returns every candidate's mean uncertainty.
pub fn select_base(ensemble: &Ensemble, cap: Option<usize>) -> Result<(NemiResult, Vec<f64>)> {
    let m = ensemble.n_members();
    let candidates = cap.unwrap_or(m).clamp(1, m);
    let sorted: Vec<ClusterSet> = ensemble.members.par_iter().map(sort_labels_by_size).collect();
    let mut best: Option<NemiResult> = None;
    let mut means = Vec::with_capacity(candidates);
    for b in 0..candidates {
        let r = aggregate_sorted(&sorted, &ensemble.weights, b)?;
        let mu = r.mean_uncertainty();
        means.push(mu);
        if best.as_ref().is_none_or(|cur| mu < cur.mean_uncertainty()) {
            best = Some(r);
        }
    }
    Ok((best.expect("at least one candidate"), means))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::overlap_sym;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(l: &[Label]) -> ClusterSet {
        ClusterSet::new(l.to_vec(), Provenance::External("t".into()))
    }

    #[test]
    fn size_sorting() {
        // sizes a(7):1, b(3):5, c(9):3
        let p = s(&[7, 3, 3, 3, 3, 3, 9, 9, 9, NOISE]);
        assert_eq!(sort_labels_by_size(&p).labels(), &[2, 0, 0, 0, 0, 0, 1, 1, 1, NOISE]);
        let sorted = s(&[0, 0, 0, 1, 1, 2]);
        assert_eq!(sort_labels_by_size(&sorted), sorted);
        assert_eq!(sort_labels_by_size(&s(&[5, 5, 2, 2, 9])).labels(), &[1, 1, 0, 0, 2]);
    }

    #[test]
    fn size_sorting_ties_keep_old_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let l: Vec<Label> = (0..30).map(|_| rng.random_range(0..6)).collect();
            let sorted = sort_labels_by_size(&s(&l));
            let size = |lab: &[Label], x: Label| lab.iter().filter(|&&v| v == x).count();
            for i in 0..30 {
                for j in 0..30 {
                    let (a, b) = (sorted.labels()[i], sorted.labels()[j]);
                    if a < b {
                        let (sa, sb) = (size(sorted.labels(), a), size(sorted.labels(), b));
                        assert!(sa > sb || (sa == sb && l[i] < l[j]));
                    }
                }
            }
        }
    }

    #[test]
    fn overlap_values() {
        let unit = [1.0; 4];
        assert_eq!(nemi_overlap(&[1, 2], &[1, 2], &unit).unwrap(), 1.0);
        assert!((nemi_overlap(&[1, 2], &[2, 3], &unit).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let vol = [0.0, 1.0, 2.0, 5.0];
        assert_eq!(nemi_overlap(&[1, 2], &[2, 3], &vol).unwrap(), 0.25);
        assert_eq!(nemi_overlap(&[], &[], &unit), Err(NemiError::EmptySets));
        assert_eq!(nemi_overlap(&[0], &[], &unit).unwrap(), 0.0);
    }

    #[test]
    fn matching_recovers_permutations_and_splits() {
        let w = [1.0; 6];
        let base = s(&[0, 0, 0, 1, 1, 2]);
        assert_eq!(match_to_base(&base, &base, &w), base.labels());
        let swapped = s(&[1, 1, 1, 0, 0, 2]);
        assert_eq!(match_to_base(&base, &swapped, &w), base.labels());
        // member splits base cluster 0 into {0,1} and {2}
        let split = s(&[0, 0, 3, 1, 1, 2]);
        assert_eq!(match_to_base(&base, &split, &w), vec![0, 0, 3, 1, 1, 2]);
        let split2 = s(&[0, 0, 1, 2, 2, 3]);
        assert_eq!(match_to_base(&base, &split2, &w), vec![0, 0, 3, 1, 1, 2]);
    }

    #[test]
    fn identical_members_are_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l: Vec<Label> = (0..200).map(|_| rng.random_range(-1..5)).collect();
        let e = Ensemble::new(vec![s(&l); 100], None).unwrap();
        let r = aggregate(&e, 0).unwrap();
        assert!(r.uncertainty.iter().all(|&u| u == 0.0));
        for m in e.members() {
            assert_eq!(overlap_sym(&r.final_labels, m).unwrap(), 1.0);
        }
        let (best, means) = select_base(&e, Some(5)).unwrap();
        assert_eq!(best.base_id, 0);
        assert_eq!(means, vec![0.0; 5]);
    }

    #[test]
    fn single_cell_disagreement_is_fifty() {
        let a = s(&[0, 0, 0, 1, 1, 1]);
        let b = s(&[0, 0, 1, 1, 1, 1]);
        let e = Ensemble::new(vec![a, b], None).unwrap();
        let r = aggregate(&e, 0).unwrap();
        assert_eq!(r.uncertainty, vec![0.0, 0.0, 50.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.final_labels.labels(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn eighty_five_of_hundred() {
        let base = vec![0, 0, 1, 1];
        let other = vec![0, 1, 1, 1];
        let mut members = vec![s(&base); 85];
        members.extend(vec![s(&other); 15]);
        let r = aggregate(&Ensemble::new(members, None).unwrap(), 0).unwrap();
        assert!((r.uncertainty[1] - 15.0).abs() < 1e-9);
    }

    #[test]
    fn outlier_is_not_chosen_as_base() {
        let good = s(&[0, 0, 0, 1, 1, 1, 2, 2]);
        let outlier = s(&[0; 8]);
        let e = Ensemble::new(vec![outlier, good.clone(), good.clone(), good], None).unwrap();
        let (best, means) = select_base(&e, None).unwrap();
        assert_ne!(best.base_id, 0);
        assert!(means[0] > means[best.base_id]);
    }

    #[test]
    fn base_noise_stays_noise() {
        let a = s(&[0, 0, NOISE, 1]);
        let b = s(&[0, 0, 0, 1]);
        let c = s(&[0, 0, NOISE, 1]);
        let r = aggregate(&Ensemble::new(vec![a, b, c], None).unwrap(), 0).unwrap();
        assert_eq!(r.final_labels.labels()[2], NOISE);
        assert!((r.uncertainty[2] - 100.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn uncertainty_on_member_grid_and_order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base: Vec<Label> = (0..50).map(|_| rng.random_range(0..4)).collect();
        let members: Vec<ClusterSet> = (0..7)
            .map(|_| {
                let l: Vec<Label> = base
                    .iter()
                    .map(|&b| if rng.random::<f64>() < 0.2 { rng.random_range(-1..5) } else { b })
                    .collect();
                s(&l)
            })
            .collect();
        let mut all = vec![s(&base)];
        all.extend(members.clone());
        let r = aggregate(&Ensemble::new(all.clone(), None).unwrap(), 0).unwrap();
        for &u in &r.uncertainty {
            let m = u / 100.0 * 8.0;
            assert!((m - m.round()).abs() < 1e-9 && m.round() < 8.0);
        }
        let mut reversed = vec![s(&base)];
        reversed.extend(members.into_iter().rev());
        let q = aggregate(&Ensemble::new(reversed, None).unwrap(), 0).unwrap();
        assert_eq!(r.final_labels, q.final_labels);
        assert_eq!(r.uncertainty, q.uncertainty);
    }

    #[test]
    fn rejects_bad_ensembles() {
        assert!(Ensemble::new(vec![s(&[0])], None).is_err());
        assert!(Ensemble::new(vec![s(&[0]), s(&[0, 1])], None).is_err());
        assert!(Ensemble::new(vec![s(&[0]), s(&[1])], Some(vec![0.0])).is_err());
        let e = Ensemble::new(vec![s(&[0]), s(&[1])], None).unwrap();
        assert!(aggregate(&e, 2).is_err());
    }
}
