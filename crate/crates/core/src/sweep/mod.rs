//! Hyperparameter exploration: CVI curves over k, DBSCAN heatmaps, elbow
//! detection and repeated embed-and-cluster ensembles.

mod elbow;
mod ensemble;
mod grid;

pub use elbow::{elbow_1d, elbow_2d};
pub use ensemble::{ensemble_run, Embedder, EnsembleConfig, EnsembleRun, PairStats, RunOutput, Variability};
pub use grid::{
    dbscan_grid, linspace, score_curve, Algorithm, Heatmap, HeatmapCell, MetricStats, ScoreCurve, METRICS,
};

use thiserror::Error;

use crate::clustering::ClusterError;
use crate::embedding::EmbedError;
use crate::nemi::NemiError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep parameter: {0}")]
    InvalidParameter(String),
    #[error("no elbow: {0}")]
    NoElbow(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Nemi(#[from] NemiError),
}

pub type Result<T, E = SweepError> = std::result::Result<T, E>;

/// Mean and population standard deviation; `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
