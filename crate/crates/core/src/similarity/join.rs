use std::collections::HashMap;

use super::{agreement, Agreement, NoiseMode, Result, SimilarityError};
use crate::grid::{cell_key, GridDataset};
use crate::partition::{ClusterSet, Label, Provenance};

/// Two labelings aligned on shared cells.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinedLabels {
    pub a: ClusterSet,
    pub b: ClusterSet,
    /// Cells of A (with a label) that B lacks or leaves unlabeled.
    pub dropped_a: usize,
    /// Cells of B (with a label) that A lacks or leaves unlabeled.
    pub dropped_b: usize,
}

impl JoinedLabels {
    pub fn dropped(&self) -> usize {
        self.dropped_a + self.dropped_b
    }
}

/// Joins the label columns of two datasets on `(lev_m, latitude, longitude)`,
/// keeping A's cell order.
pub fn join_labels(a: &GridDataset, b: &GridDataset) -> JoinedLabels {
    let b_index: HashMap<(i64, i64, i64), Label> = b
        .cells
        .iter()
        .filter_map(|c| c.label.map(|l| (cell_key(c.lev_m, c.latitude, c.longitude), l)))
        .collect();
    let mut la = Vec::new();
    let mut lb = Vec::new();
    let mut labelled_a = 0;
    for c in &a.cells {
        let Some(l) = c.label else { continue };
        labelled_a += 1;
        if let Some(&m) = b_index.get(&cell_key(c.lev_m, c.latitude, c.longitude)) {
            la.push(l);
            lb.push(m);
        }
    }
    let matched = la.len();
    JoinedLabels {
        a: ClusterSet::new(la, Provenance::External("left".into())),
        b: ClusterSet::new(lb, Provenance::External("right".into())),
        dropped_a: labelled_a - matched,
        dropped_b: b_index.len() - matched,
    }
}

/// Joins two labeled datasets and scores their agreement.
pub fn compare_datasets(a: &GridDataset, b: &GridDataset, mode: NoiseMode) -> Result<(Agreement, JoinedLabels)> {
    let joined = join_labels(a, b);
    if joined.a.is_empty() {
        return Err(SimilarityError::NothingToCompare);
    }
    let report = agreement(&joined.a, &joined.b, mode)?;
    Ok((report, joined))
}
