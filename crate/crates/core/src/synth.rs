//! Gaussian-blob generator for tests, benchmarks and acceptance runs.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{GridCell, GridDataset, GridError, DEPTH_BOUNDARIES, N_PARAMS};
use crate::partition::{ClusterSet, Label, Provenance};

/// Up to seven well-separated 6-D centres: the origin, then `spacing` along
/// each axis in turn.
///
/// # Panics
/// Panics if `k > 7`.
pub fn axis_centres(k: usize, spacing: f64) -> Vec<[f64; N_PARAMS]> {
    assert!(k <= N_PARAMS + 1, "at most {} axis centres", N_PARAMS + 1);
    (0..k)
        .map(|c| {
            let mut p = [0.0; N_PARAMS];
            if c > 0 {
                p[c - 1] = spacing;
            }
            p
        })
        .collect()
}

/// `n_per` isotropic normal points around each centre, grouped by blob.
/// Returns the points and the true blob of each.
pub fn gaussian_blobs(n_per: usize, centres: &[[f64; N_PARAMS]], sigma: f64, seed: u64) -> (Array2<f64>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("sigma is finite");
    let mut x = Array2::zeros((n_per * centres.len(), N_PARAMS));
    let mut truth = Vec::with_capacity(x.nrows());
    for (c, centre) in centres.iter().enumerate() {
        for p in 0..n_per {
            let mut row = x.row_mut(c * n_per + p);
            for (v, m) in row.iter_mut().zip(centre) {
                *v = m + noise.sample(&mut rng);
            }
            truth.push(c as Label);
        }
    }
    (x, truth)
}

/// Blobs laid out on distinct cells of the North Atlantic grid (longitude
/// fastest, then latitude, then depth). Also returns the ground truth.
pub fn blob_dataset(
    n_per: usize,
    centres: &[[f64; N_PARAMS]],
    sigma: f64,
    seed: u64,
) -> Result<(GridDataset, ClusterSet), GridError> {
    let (x, truth) = gaussian_blobs(n_per, centres, sigma, seed);
    let (n_lat, n_lon) = (70usize, 107usize);
    let capacity = n_lat * n_lon * (DEPTH_BOUNDARIES.len() - 1);
    if x.nrows() > capacity {
        return Err(GridError::Invalid {
            line: 0,
            message: format!("{} points exceed the {capacity} grid cells", x.nrows()),
        });
    }
    let mut cells = Vec::with_capacity(x.nrows());
    for (i, row) in x.rows().into_iter().enumerate() {
        let lon = i % n_lon;
        let lat = (i / n_lon) % n_lat;
        let lev = i / (n_lon * n_lat);
        let mut cell = GridCell::new(DEPTH_BOUNDARIES[lev], lat as f64 + 0.5, -77.0 + lon as f64 + 0.5)?;
        for (slot, v) in cell.params.iter_mut().zip(row) {
            *slot = Some(*v);
        }
        cells.push(cell);
    }
    let ds = GridDataset::new(cells, None)?;
    Ok((ds, ClusterSet::new(truth, Provenance::External("synthetic truth".into()))))
}
