//! Fuzzy-graph manifold embedding (UMAP-style) and embedding-quality metrics.
//!
//! [`embed`] runs the full chain: exact kNN, per-point bandwidths, fuzzy
//! union, curve fit, spectral-style initial layout and negative-sampling SGD.

mod curve;
mod fuzzy;
mod init;
mod knn;
mod optimize;
mod quality;

pub use curve::{fit_ab, max_residual, psi, rms_residual};
pub use fuzzy::FuzzyGraph;
pub use init::initial_layout;
pub use knn::{knn_graph, NeighborGraph};
pub use quality::{continuity, coranking_q, shepard_pairs, trustworthiness};

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::FeatureMatrix;
use optimize::{sampled_cross_entropy, sgd_layout, SgdSettings};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("n_neighbors = {k} requires more than {k} points, got {n}")]
    TooManyNeighbors { k: usize, n: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("feature matrix has missing values; impute first")]
    MissingValues,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
}

pub type Result<T, E = EmbedError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub n_components: usize,
    /// Curve parameters; fitted from `min_dist` when `None`.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n_epochs: usize,
    pub negative_sample_rate: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbeddingParams {
    fn default() -> Self {
        Self {
            n_neighbors: 20,
            min_dist: 0.0,
            n_components: 3,
            a: None,
            b: None,
            n_epochs: 500,
            negative_sample_rate: 5,
            learning_rate: 1.0,
            seed: 0,
        }
    }
}

impl EmbeddingParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `(a, b)`, either as given or fitted.
    pub fn curve(&self) -> (f64, f64) {
        match (self.a, self.b) {
            (Some(a), Some(b)) => (a, b),
            _ => fit_ab(self.min_dist),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_neighbors < 2 {
            return Err(EmbedError::InvalidParameter("n_neighbors must be at least 2".into()));
        }
        if !(self.min_dist >= 0.0 && self.min_dist.is_finite()) {
            return Err(EmbedError::InvalidParameter("min_dist must be finite and ≥ 0".into()));
        }
        if self.n_components == 0 {
            return Err(EmbedError::InvalidParameter("n_components must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(EmbedError::InvalidParameter("learning_rate must be positive".into()));
        }
        for (name, v) in [("a", self.a), ("b", self.b)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(EmbedError::InvalidParameter(format!("{name} must be positive")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    /// `n × n_components`, rows in dataset order.
    pub coords: Array2<f64>,
    /// Parameters used, with `a` and `b` filled in.
    pub params: EmbeddingParams,
    pub final_cross_entropy: f64,
}

impl Embedding {
    pub fn n_points(&self) -> usize {
        self.coords.nrows()
    }
}

/// Optimises from a seeded uniform layout in `[-10, 10]`.
pub fn optimize_embedding(graph: &FuzzyGraph, params: &EmbeddingParams) -> Result<Embedding> {
    let n = graph.n_points();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init = Array2::from_shape_fn((n, params.n_components), |_| rng.random_range(-10.0..=10.0));
    optimize_from(graph, init, params)
}

/// Optimises from a caller-provided layout.
pub fn optimize_from(graph: &FuzzyGraph, initial: Array2<f64>, params: &EmbeddingParams) -> Result<Embedding> {
    params.validate()?;
    let n = graph.n_points();
    if n < 2 {
        return Err(EmbedError::TooFewPoints { need: 2, got: n });
    }
    if initial.nrows() != n || initial.ncols() != params.n_components {
        return Err(EmbedError::ShapeMismatch(format!(
            "initial layout is {}×{}, expected {}×{}",
            initial.nrows(),
            initial.ncols(),
            n,
            params.n_components
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    let (a, b) = params.curve();
    let settings = SgdSettings {
        a,
        b,
        n_epochs: params.n_epochs,
        negative_sample_rate: params.negative_sample_rate,
        learning_rate: params.learning_rate,
        seed: params.seed,
    };
    let mut coords = initial;
    sgd_layout(graph, &mut coords, &settings);
    if coords.iter().any(|v| !v.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    let final_cross_entropy = sampled_cross_entropy(graph, &coords, a, b, params.negative_sample_rate, params.seed);
    let mut used = params.clone();
    used.a = Some(a);
    used.b = Some(b);
    Ok(Embedding {
        coords,
        params: used,
        final_cross_entropy,
    })
}

/// Embeds a raw matrix.
pub fn embed_array(x: ArrayView2<'_, f64>, params: &EmbeddingParams) -> Result<Embedding> {
    params.validate()?;
    let neighbours = knn_graph(x, params.n_neighbors)?;
    let graph = FuzzyGraph::from_neighbors(&neighbours);
    let init = initial_layout(x, params.n_components, params.seed);
    optimize_from(&graph, init, params)
}

/// Embeds a complete feature matrix.
pub fn embed(x: &FeatureMatrix, params: &EmbeddingParams) -> Result<Embedding> {
    if x.has_missing() {
        return Err(EmbedError::MissingValues);
    }
    embed_array(x.values.view(), params)
}
