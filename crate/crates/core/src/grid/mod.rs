//! Gridded ocean cells: the data model every later stage indexes into.
//!
//! A [`GridDataset`] is an ordered list of [`GridCell`]s. Its order is the
//! canonical point order for feature matrices, embeddings and labelings.

mod csv_io;
mod geometry;
mod impute;
mod scaling;
mod stats;

pub use csv_io::{
    parse_cluster_csv, parse_grid_csv, write_cluster_csv, CsvOptions, CLUSTER_CSV_COLUMNS,
};
pub use geometry::{cell_volume, depth_interval, grid_cell_volume, DEPTH_BOUNDARIES, EARTH_RADIUS_M};
pub use impute::knn_impute;
pub use scaling::{min_max_scale, ScalingParams};
pub use stats::{dataset_stats, ParamStats};

use std::collections::HashSet;

use ndarray::Array2;
use thiserror::Error;

use crate::partition::{ClusterSet, Label, Provenance};

/// Number of physical/biogeochemical parameters per cell.
pub const N_PARAMS: usize = 6;

/// Column names of the six parameters, in storage order.
pub const PARAMETER_NAMES: [&str; N_PARAMS] = [
    "P_TEMPERATURE",
    "P_SALINITY",
    "P_OXYGEN",
    "P_NITRATE",
    "P_SILICATE",
    "P_PHOSPHATE",
];

#[derive(Debug, Error)]
pub enum GridError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("line {line}: cannot parse `{value}` in column `{column}`")]
    Parse {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: required field `{column}` is empty")]
    EmptyField { line: usize, column: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("duplicate cell (lev_m={lev_m}, lat={latitude}, lon={longitude}) at line {line}")]
    DuplicateCell {
        line: usize,
        lev_m: f64,
        latitude: f64,
        longitude: f64,
    },
    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),
    #[error("column `{column}`: {available} donor cells available, {k} required")]
    InsufficientDonors {
        column: String,
        available: usize,
        k: usize,
    },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("cluster label {0} collides with the noise label written to file")]
    LabelCollision(Label),
    #[error("length mismatch: dataset has {expected} cells, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cell {0} has no embedding coordinates")]
    MissingEmbedding(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GridError> = std::result::Result<T, E>;

/// Latitude/longitude/depth limits accepted at ingest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridBounds {
    pub latitude: (f64, f64),
    pub longitude: (f64, f64),
    pub depth: (f64, f64),
}

impl GridBounds {
    /// The North Atlantic domain: 0..70 N, 77 W..30 E, 0..5000 m.
    pub const NORTH_ATLANTIC: GridBounds = GridBounds {
        latitude: (0.0, 70.0),
        longitude: (-77.0, 30.0),
        depth: (0.0, 5000.0),
    };

    pub fn contains(&self, lev_m: f64, latitude: f64, longitude: f64) -> bool {
        (self.latitude.0..=self.latitude.1).contains(&latitude)
            && (self.longitude.0..=self.longitude.1).contains(&longitude)
            && (self.depth.0..=self.depth.1).contains(&lev_m)
    }
}

impl Default for GridBounds {
    fn default() -> Self {
        Self::NORTH_ATLANTIC
    }
}

/// One 1°×1°×depth-interval cell.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    /// Upper depth boundary in metres.
    pub lev_m: f64,
    /// Cell-centre latitude, degrees.
    pub latitude: f64,
    /// Cell-centre longitude, degrees.
    pub longitude: f64,
    /// Temperature, salinity, oxygen, nitrate, silicate, phosphate.
    pub params: [Option<f64>; N_PARAMS],
    pub embedding: [Option<f64>; 3],
    /// Cubic metres.
    pub volume: f64,
    pub label: Option<Label>,
    /// Percent in `[0, 100]`.
    pub uncertainty: Option<f64>,
    pub color: Option<String>,
    pub water: bool,
    /// Percent of the six parameters that were imputed.
    pub imputed: f64,
}

impl GridCell {
    /// A water cell with no parameters, embedding or label yet. Volume is
    /// derived from the 1° grid and the depth interval starting at `lev_m`.
    pub fn new(lev_m: f64, latitude: f64, longitude: f64) -> Result<Self> {
        Ok(Self {
            lev_m,
            latitude,
            longitude,
            params: [None; N_PARAMS],
            embedding: [None; 3],
            volume: grid_cell_volume(lev_m, latitude)?,
            label: None,
            uncertainty: None,
            color: None,
            water: true,
            imputed: 0.0,
        })
    }

    pub fn n_missing(&self) -> usize {
        self.params.iter().filter(|p| p.is_none()).count()
    }
}

/// Feature values with an explicit missing mask. Missing entries hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub missing: Array2<bool>,
    pub column_names: Vec<String>,
}

impl FeatureMatrix {
    /// Wraps a complete matrix (no missing values).
    pub fn complete(values: Array2<f64>, column_names: Vec<String>) -> Self {
        assert_eq!(values.ncols(), column_names.len());
        let missing = Array2::from_elem(values.dim(), false);
        Self {
            values,
            missing,
            column_names,
        }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }
}

/// Ordered cells plus the bounds they were validated against.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDataset {
    pub cells: Vec<GridCell>,
    pub parameter_names: [String; N_PARAMS],
    pub bounds: Option<GridBounds>,
}

impl GridDataset {
    /// Builds a dataset, checking that `(lev_m, latitude, longitude)` triples are unique.
    pub fn new(cells: Vec<GridCell>, bounds: Option<GridBounds>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            if !seen.insert(cell_key(c.lev_m, c.latitude, c.longitude)) {
                return Err(GridError::DuplicateCell {
                    line: i + 2,
                    lev_m: c.lev_m,
                    latitude: c.latitude,
                    longitude: c.longitude,
                });
            }
        }
        Ok(Self {
            cells,
            parameter_names: PARAMETER_NAMES.map(String::from),
            bounds,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The six parameters as an `n×6` matrix with missing mask.
    pub fn feature_matrix(&self) -> FeatureMatrix {
        let n = self.cells.len();
        let mut values = Array2::from_elem((n, N_PARAMS), f64::NAN);
        let mut missing = Array2::from_elem((n, N_PARAMS), true);
        for (i, cell) in self.cells.iter().enumerate() {
            for (j, p) in cell.params.iter().enumerate() {
                if let Some(v) = p {
                    values[[i, j]] = *v;
                    missing[[i, j]] = false;
                }
            }
        }
        FeatureMatrix {
            values,
            missing,
            column_names: self.parameter_names.to_vec(),
        }
    }

    /// Embedding coordinates `e0..e{dim}` as an `n×dim` matrix.
    pub fn embedding_matrix(&self, dim: usize) -> Result<Array2<f64>> {
        let dim = dim.min(3);
        let mut out = Array2::zeros((self.cells.len(), dim));
        for (i, cell) in self.cells.iter().enumerate() {
            for d in 0..dim {
                out[[i, d]] = cell.embedding[d].ok_or(GridError::MissingEmbedding(i))?;
            }
        }
        Ok(out)
    }

    pub fn set_embedding(&mut self, coords: &Array2<f64>) -> Result<()> {
        self.check_len(coords.nrows())?;
        for (cell, row) in self.cells.iter_mut().zip(coords.rows()) {
            cell.embedding = [None; 3];
            for (d, v) in row.iter().take(3).enumerate() {
                cell.embedding[d] = Some(*v);
            }
        }
        Ok(())
    }

    pub fn set_labels(&mut self, partition: &ClusterSet) -> Result<()> {
        self.check_len(partition.len())?;
        for (cell, &l) in self.cells.iter_mut().zip(partition.labels()) {
            cell.label = Some(l);
        }
        Ok(())
    }

    pub fn set_uncertainty(&mut self, uncertainty: &[f64]) -> Result<()> {
        self.check_len(uncertainty.len())?;
        for (cell, &u) in self.cells.iter_mut().zip(uncertainty) {
            cell.uncertainty = Some(u);
        }
        Ok(())
    }

    /// Labels as a [`ClusterSet`]; `None` if any cell is unlabeled.
    pub fn labels(&self) -> Option<ClusterSet> {
        let labels: Option<Vec<Label>> = self.cells.iter().map(|c| c.label).collect();
        labels.map(|l| ClusterSet::new(l, Provenance::External("dataset".into())))
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.volume).collect()
    }

    /// Gives every labeled cell a deterministic hex colour derived from its label.
    pub fn assign_colors(&mut self) {
        for cell in &mut self.cells {
            cell.color = cell.label.map(label_color);
        }
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.cells.len() {
            return Err(GridError::LengthMismatch {
                expected: self.cells.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Join key for a cell: coordinates rounded to 1e-6.
pub fn cell_key(lev_m: f64, latitude: f64, longitude: f64) -> (i64, i64, i64) {
    let q = |v: f64| (v * 1e6).round() as i64;
    (q(lev_m), q(latitude), q(longitude))
}

/// Golden-angle hue walk; noise is grey.
fn label_color(label: Label) -> String {
    if label < 0 {
        return "#808080".to_string();
    }
    let h = (label as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let (s, v) = (0.65, 0.9);
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to = |u: f64| ((u + m) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", to(r), to(g), to(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_triples_rejected() {
        let a = GridCell::new(0.0, 0.5, 0.5).unwrap();
        let err = GridDataset::new(vec![a.clone(), a], None).unwrap_err();
        assert!(matches!(err, GridError::DuplicateCell { .. }));
    }

    #[test]
    fn feature_matrix_marks_missing() {
        let mut a = GridCell::new(0.0, 0.5, 0.5).unwrap();
        a.params = [Some(1.0), None, Some(3.0), None, None, Some(6.0)];
        let ds = GridDataset::new(vec![a], None).unwrap();
        let fm = ds.feature_matrix();
        assert!(fm.missing[[0, 1]]);
        assert!(!fm.missing[[0, 0]]);
        assert_eq!(fm.values[[0, 5]], 6.0);
        assert!(fm.values[[0, 1]].is_nan());
    }

    #[test]
    fn colors_are_hex() {
        for l in [-1, 0, 1, 17, 320] {
            let c = label_color(l);
            assert_eq!(c.len(), 7);
            assert!(c.starts_with('#'));
        }
    }
}
