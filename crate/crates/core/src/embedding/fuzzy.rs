use std::collections::HashMap;

use super::knn::NeighborGraph;

/// Symmetric fuzzy graph: each undirected edge stored once with `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzyGraph {
    n_points: usize,
    /// Sorted by `(i, j)`.
    edges: Vec<(usize, usize, f64)>,
}

impl FuzzyGraph {
    /// Fuzzy union of the directed memberships: `μ_ab + μ_ba − μ_ab·μ_ba`.
    pub fn from_neighbors(graph: &NeighborGraph) -> Self {
        let n = graph.n_points();
        let mut directed: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
        for i in 0..n {
            for slot in 0..graph.k() {
                let j = graph.knn_indices[[i, slot]];
                let w = graph.membership(i, slot);
                if w <= 0.0 || i == j {
                    continue;
                }
                let (lo, hi) = (i.min(j), i.max(j));
                let entry = directed.entry((lo, hi)).or_insert((0.0, 0.0));
                if i == lo {
                    entry.0 = w;
                } else {
                    entry.1 = w;
                }
            }
        }
        let mut edges: Vec<(usize, usize, f64)> = directed
            .into_iter()
            .map(|((i, j), (a, b))| (i, j, a + b - a * b))
            .filter(|e| e.2 > 0.0)
            .collect();
        edges.sort_unstable_by_key(|e| (e.0, e.1));
        Self { n_points: n, edges }
    }

    /// Builds a graph from explicit undirected edges. Weights outside `(0, 1]`
    /// are rejected; duplicates keep the last weight.
    pub fn from_edges(n_points: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Option<Self> {
        let mut map: HashMap<(usize, usize), f64> = HashMap::new();
        for (i, j, w) in edges {
            if i == j || i >= n_points || j >= n_points || !(w > 0.0 && w <= 1.0) {
                return None;
            }
            map.insert((i.min(j), i.max(j)), w);
        }
        let mut edges: Vec<_> = map.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        edges.sort_unstable_by_key(|e| (e.0, e.1));
        Some(Self { n_points, edges })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Weight of the edge between `i` and `j`, zero if absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|p| self.edges[p].2)
            .unwrap_or(0.0)
    }
}
