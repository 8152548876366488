use std::io::Write;

use ndarray::ArrayView2;

use super::{calinski_harabasz, cdr, cvnnh, davies_bouldin, kdbcv, silhouette};
use crate::partition::ClusterSet;

/// The six indices for one labeling; `None` where an index is undefined.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Scores {
    pub ch: Option<f64>,
    pub db: Option<f64>,
    pub sh: Option<f64>,
    pub kdbcv: Option<f64>,
    pub cvnnh: Option<f64>,
    pub cdr: Option<f64>,
}

/// All six indices. Failures (too few clusters, degenerate geometry) are
/// recorded as `None` so a sweep can continue.
pub fn score_all(x: ArrayView2<'_, f64>, partition: &ClusterSet, cvnn_k: usize) -> Scores {
    // CVNNH needs k < n retained points; shrink K on tiny inputs
    let retained = partition.len() - partition.n_noise();
    let k = cvnn_k.min(retained.saturating_sub(1));
    Scores {
        ch: calinski_harabasz(x, partition).ok(),
        db: davies_bouldin(x, partition).ok(),
        sh: silhouette(x, partition).ok(),
        kdbcv: kdbcv(x, partition).ok(),
        cvnnh: cvnnh(x, partition, k).ok(),
        cdr: cdr(x, partition).ok(),
    }
}

/// One line of a score report.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub algorithm: String,
    /// Hyperparameters as `key=value` pairs separated by `;`.
    pub params: String,
    pub repeat: usize,
    pub scores: Scores,
    pub n_clusters: usize,
    pub noise_fraction: f64,
}

impl ScoreRow {
    pub fn new(algorithm: &str, params: &str, repeat: usize, scores: Scores, partition: &ClusterSet) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            params: params.to_string(),
            repeat,
            scores,
            n_clusters: partition.n_clusters(),
            noise_fraction: partition.noise_fraction(),
        }
    }
}

const HEADER: [&str; 11] = [
    "algorithm",
    "params",
    "repeat",
    "CH",
    "DB",
    "SH",
    "k_DBCV",
    "CVNNH",
    "CDR",
    "n_clusters",
    "noise_fraction",
];

/// Writes rows as CSV; undefined scores are empty fields.
pub fn write_score_report<W: Write>(rows: &[ScoreRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let s = &r.scores;
        w.write_record([
            r.algorithm.clone(),
            r.params.clone(),
            r.repeat.to_string(),
            fmt(s.ch),
            fmt(s.db),
            fmt(s.sh),
            fmt(s.kdbcv),
            fmt(s.cvnnh),
            fmt(s.cdr),
            r.n_clusters.to_string(),
            r.noise_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvi::fixtures::{pairs, set};
    use crate::partition::NOISE;

    #[test]
    fn report_round_trip() {
        let (x, p) = pairs();
        let s = score_all(x.view(), &p, 10);
        assert!((s.ch.unwrap() - 200.0).abs() < 1e-9);
        assert_eq!(s.cdr, Some(0.0));
        assert_eq!(s.cvnnh.unwrap(), cvnnh(x.view(), &p, 3).unwrap());
        let noise = set(&[NOISE; 4]);
        let t = score_all(x.view(), &noise, 10);
        assert_eq!(t.kdbcv, Some(-1.0));
        assert_eq!(t.ch, None);

        let rows = vec![
            ScoreRow::new("kmeans", "k=2", 0, s, &p),
            ScoreRow::new("dbscan", "eps=0.1;min_samples=2", 1, t, &noise),
        ];
        let mut buf = Vec::new();
        write_score_report(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("algorithm,params,repeat,CH,DB,SH,k_DBCV,CVNNH,CDR"));
        assert!(lines[2].starts_with("dbscan,eps=0.1;min_samples=2,1,,,,-1,"));
        assert!(lines[2].ends_with(",0,1"));
    }
}
