use std::io::Write;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::{mean_std, Result, SweepError};
use crate::clustering::{dbscan, dbscan_shuffled};
use crate::embedding::{embed_array, EmbeddingParams};
use crate::nemi::Ensemble;
use crate::partition::ClusterSet;
use crate::similarity::{agreement, NoiseMode};

/// What to cluster in each run.
#[derive(Clone, Debug, PartialEq)]
pub enum Embedder {
    /// Embed with these parameters; the seed is replaced per run.
    Umap(EmbeddingParams),
    /// Cluster the input directly.
    Identity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub embedder: Embedder,
    pub epsilon: f64,
    pub min_samples: usize,
    /// Visit DBSCAN points in an order drawn from the run seed.
    pub shuffle_order: bool,
    /// Per-point weights handed to the ensemble (volumes); counts when `None`.
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub seed: u64,
    /// Embedding coordinates; `None` for the identity embedder.
    pub coords: Option<Array2<f64>>,
    pub labels: ClusterSet,
}

/// Agreement between runs `a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairStats {
    pub a: usize,
    pub b: usize,
    pub ari: f64,
    pub nmi: f64,
    pub overlap_sym: f64,
}

/// Mean and population std over all run pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Variability {
    pub pairs: Vec<PairStats>,
    pub ari: (f64, f64),
    pub nmi: (f64, f64),
    pub overlap_sym: (f64, f64),
}

impl Variability {
    pub fn from_runs(runs: &[ClusterSet]) -> Result<Self> {
        let idx: Vec<(usize, usize)> = (0..runs.len())
            .flat_map(|a| ((a + 1)..runs.len()).map(move |b| (a, b)))
            .collect();
        if idx.is_empty() {
            return Err(SweepError::InvalidParameter("need at least 2 runs to compare".into()));
        }
        let pairs: Vec<PairStats> = idx
            .par_iter()
            .map(|&(a, b)| {
                let g = agreement(&runs[a], &runs[b], NoiseMode::AsLabel)
                    .map_err(|e| SweepError::InvalidParameter(e.to_string()))?;
                Ok(PairStats {
                    a,
                    b,
                    ari: g.ari,
                    nmi: g.nmi,
                    overlap_sym: g.overlap_sym,
                })
            })
            .collect::<Result<_>>()?;
        let stat = |f: fn(&PairStats) -> f64| mean_std(&pairs.iter().map(f).collect::<Vec<_>>()).unwrap_or_default();
        Ok(Self {
            ari: stat(|p| p.ari),
            nmi: stat(|p| p.nmi),
            overlap_sym: stat(|p| p.overlap_sym),
            pairs,
        })
    }

    /// `run_a,run_b,ari,nmi,overlap_sym`, one row per pair.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["run_a", "run_b", "ari", "nmi", "overlap_sym"])?;
        for p in &self.pairs {
            w.write_record([
                p.a.to_string(),
                p.b.to_string(),
                p.ari.to_string(),
                p.nmi.to_string(),
                p.overlap_sym.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub runs: Vec<RunOutput>,
    pub ensemble: Ensemble,
    pub variability: Variability,
}

/// Run `i` embeds with seed `base_seed + i` and clusters the result with
/// DBSCAN. Runs execute concurrently and are collected in index order.
pub fn ensemble_run(
    x: ArrayView2<'_, f64>,
    config: &EnsembleConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<EnsembleRun> {
    if n_runs < 2 {
        return Err(SweepError::InvalidParameter(format!("n_runs must be at least 2, got {n_runs}")));
    }
    let runs: Vec<RunOutput> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let coords = match &config.embedder {
                Embedder::Umap(p) => Some(embed_array(x, &p.clone().with_seed(seed))?.coords),
                Embedder::Identity => None,
            };
            let view = coords.as_ref().map_or(x, |c| c.view());
            let labels = if config.shuffle_order {
                dbscan_shuffled(view, config.epsilon, config.min_samples, seed)?
            } else {
                dbscan(view, config.epsilon, config.min_samples, None)?
            };
            Ok(RunOutput { seed, coords, labels })
        })
        .collect::<Result<_>>()?;
    let members: Vec<ClusterSet> = runs.iter().map(|r| r.labels.clone()).collect();
    let variability = Variability::from_runs(&members)?;
    let ensemble = Ensemble::new(members, config.weights.clone())?;
    Ok(EnsembleRun {
        runs,
        ensemble,
        variability,
    })
}
