use std::io::Write;

use ndarray::ArrayView2;
use rayon::prelude::*;

use super::{elbow_2d, mean_std, Result, SweepError};
use crate::clustering::{dbscan, dbscan_shuffled, kmeans, ward, KMeansParams};
use crate::cvi::{score_all, Scores};
use crate::partition::ClusterSet;

/// Column names of the six indices, in the order used throughout this module.
pub const METRICS: [&str; 6] = ["CH", "DB", "SH", "k_DBCV", "CVNNH", "CDR"];

fn score_values(s: &Scores) -> [Option<f64>; 6] {
    [s.ch, s.db, s.sh, s.kdbcv, s.cvnnh, s.cdr]
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![min],
        _ => {
            let h = (max - min) / (steps - 1) as f64;
            (0..steps).map(|i| if i + 1 == steps { max } else { min + h * i as f64 }).collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    KMeans,
    Ward,
}

/// Summary of one index at one `k` over the repeats where it was defined.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricStats {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n_valid: usize,
}

impl MetricStats {
    fn from_values(values: &[f64]) -> Self {
        let ms = mean_std(values);
        Self {
            mean: ms.map(|m| m.0),
            std: ms.map(|m| m.1),
            n_valid: values.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreCurve {
    pub algorithm: Algorithm,
    pub k: Vec<usize>,
    pub repeats: usize,
    /// `metrics[i][m]` for `k[i]` and index `METRICS[m]`.
    pub metrics: Vec<[MetricStats; 6]>,
    pub n_clusters: Vec<MetricStats>,
    pub noise_fraction: Vec<MetricStats>,
}

impl ScoreCurve {
    /// Mean of one index across `k`, `None` where undefined.
    pub fn means(&self, metric: usize) -> Vec<Option<f64>> {
        self.metrics.iter().map(|m| m[metric].mean).collect()
    }

    /// Long format: `k,metric,mean,std,n_valid`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "metric", "mean", "std", "n_valid"])?;
        for (i, &k) in self.k.iter().enumerate() {
            let extra = [("n_clusters", self.n_clusters[i]), ("noise_fraction", self.noise_fraction[i])];
            let rows = METRICS.iter().copied().zip(self.metrics[i]).chain(extra);
            for (name, s) in rows {
                w.write_record([k.to_string(), name.into(), opt(s.mean), opt(s.std), s.n_valid.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores k-means or Ward over `k_values`, `repeats` times each. Repeat `r`
/// of k-means uses seed `base_seed + r`; Ward is deterministic and repeated
/// only to keep the shape uniform.
pub fn score_curve(
    x: ArrayView2<'_, f64>,
    algorithm: Algorithm,
    k_values: &[usize],
    repeats: usize,
    base_seed: u64,
    cvnn_k: usize,
) -> Result<ScoreCurve> {
    let n = x.nrows();
    if repeats == 0 {
        return Err(SweepError::InvalidParameter("repeats must be at least 1".into()));
    }
    if k_values.is_empty() {
        return Err(SweepError::InvalidParameter("empty k range".into()));
    }
    if let Some(&k) = k_values.iter().find(|&&k| k < 2 || k + 1 > n) {
        return Err(SweepError::InvalidParameter(format!("k = {k} outside [2, {}]", n.saturating_sub(1))));
    }
    let jobs: Vec<(usize, usize)> = (0..k_values.len()).flat_map(|i| (0..repeats).map(move |r| (i, r))).collect();
    let runs: Vec<(Scores, ClusterSet)> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let k = k_values[i];
            let p = match algorithm {
                Algorithm::KMeans => kmeans(x, &KMeansParams::new(k, base_seed.wrapping_add(r as u64)))?.partition,
                Algorithm::Ward => ward(x, k)?.0,
            };
            Ok((score_all(x, &p, cvnn_k), p))
        })
        .collect::<Result<_>>()?;

    let mut metrics = Vec::with_capacity(k_values.len());
    let mut n_clusters = Vec::with_capacity(k_values.len());
    let mut noise_fraction = Vec::with_capacity(k_values.len());
    for chunk in runs.chunks(repeats) {
        let mut per = [MetricStats::default(); 6];
        for (m, slot) in per.iter_mut().enumerate() {
            let vals: Vec<f64> = chunk.iter().filter_map(|(s, _)| score_values(s)[m]).collect();
            *slot = MetricStats::from_values(&vals);
        }
        metrics.push(per);
        let nc: Vec<f64> = chunk.iter().map(|(_, p)| p.n_clusters() as f64).collect();
        let nf: Vec<f64> = chunk.iter().map(|(_, p)| p.noise_fraction()).collect();
        n_clusters.push(MetricStats::from_values(&nc));
        noise_fraction.push(MetricStats::from_values(&nf));
    }
    Ok(ScoreCurve {
        algorithm,
        k: k_values.to_vec(),
        repeats,
        metrics,
        n_clusters,
        noise_fraction,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapCell {
    pub scores: Scores,
    pub n_clusters: usize,
    pub noise_fraction: f64,
}

/// DBSCAN results over an epsilon × min_samples grid, epsilon-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub epsilon: Vec<f64>,
    pub min_samples: Vec<usize>,
    pub order_seed: Option<u64>,
    pub cells: Vec<HeatmapCell>,
}

impl Heatmap {
    pub fn cell(&self, i: usize, j: usize) -> &HeatmapCell {
        &self.cells[i * self.min_samples.len() + j]
    }

    /// Cluster counts as rows over epsilon.
    pub fn n_clusters_grid(&self) -> Vec<Vec<f64>> {
        self.cells
            .chunks(self.min_samples.len())
            .map(|row| row.iter().map(|c| c.n_clusters as f64).collect())
            .collect()
    }

    /// `(epsilon, min_samples)` at the steepest change in cluster count.
    pub fn elbow(&self) -> Result<(f64, usize)> {
        let ms: Vec<f64> = self.min_samples.iter().map(|&m| m as f64).collect();
        let (i, j) = elbow_2d(&self.n_clusters_grid(), &self.epsilon, &ms)?;
        Ok((self.epsilon[i], self.min_samples[j]))
    }

    /// Long format: `epsilon,min_samples,metric,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epsilon", "min_samples", "metric", "value"])?;
        for (i, &eps) in self.epsilon.iter().enumerate() {
            for (j, &ms) in self.min_samples.iter().enumerate() {
                let c = self.cell(i, j);
                let extra = [("n_clusters", Some(c.n_clusters as f64)), ("noise_fraction", Some(c.noise_fraction))];
                for (name, v) in METRICS.iter().copied().zip(score_values(&c.scores)).chain(extra) {
                    w.write_record([eps.to_string(), ms.to_string(), name.into(), opt(v)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn strictly_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Runs DBSCAN at every `(epsilon, min_samples)` pair and scores each result.
/// With `order_seed` every cell uses the same shuffled point order.
pub fn dbscan_grid(
    x: ArrayView2<'_, f64>,
    epsilon: &[f64],
    min_samples: &[usize],
    order_seed: Option<u64>,
    cvnn_k: usize,
) -> Result<Heatmap> {
    if epsilon.len() < 2 || min_samples.is_empty() {
        return Err(SweepError::InvalidParameter(
            "need at least 2 epsilon values and 1 min_samples value".into(),
        ));
    }
    if !strictly_increasing(epsilon) || !strictly_increasing(min_samples) {
        return Err(SweepError::InvalidParameter("grid axes must be strictly increasing".into()));
    }
    let jobs: Vec<(f64, usize)> = epsilon
        .iter()
        .flat_map(|&e| min_samples.iter().map(move |&m| (e, m)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(e, m)| {
            let p = match order_seed {
                Some(s) => dbscan_shuffled(x, e, m, s)?,
                None => dbscan(x, e, m, None)?,
            };
            Ok(HeatmapCell {
                scores: score_all(x, &p, cvnn_k),
                n_clusters: p.n_clusters(),
                noise_fraction: p.noise_fraction(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Heatmap {
        epsilon: epsilon.to_vec(),
        min_samples: min_samples.to_vec(),
        order_seed,
        cells,
    })
}
