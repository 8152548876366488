//! Distance-weighted k-nearest-neighbour imputation of missing parameters.

use rayon::prelude::*;

use super::{GridDataset, GridError, Result, N_PARAMS, PARAMETER_NAMES};

const N_FEATURES: usize = N_PARAMS + 3;

/// Fills every missing parameter with the inverse-distance-weighted mean of
/// the `k` nearest cells that have that parameter.
///
/// Distances use nine features: the six parameters and latitude, longitude
/// and depth, each min-max scaled to `[0, 1]`. Only features present in both
/// cells contribute, and the squared sum is rescaled by `9 / n_shared`.
/// A donor at distance zero is copied exactly (ties among several such
/// donors are averaged). Cells that needed imputation get `imputed` set to
/// the percentage of their parameters that were filled.
pub fn knn_impute(dataset: &GridDataset, k: usize) -> Result<GridDataset> {
    let n = dataset.len();
    if k == 0 {
        return Err(GridError::InsufficientDonors {
            column: "k".into(),
            available: 0,
            k,
        });
    }
    let needs_any = dataset.cells.iter().any(|c| c.n_missing() > 0);
    if !needs_any {
        return Ok(dataset.clone());
    }

    // donor availability per column
    for (j, name) in PARAMETER_NAMES.iter().enumerate() {
        let column_missing = dataset.cells.iter().any(|c| c.params[j].is_none());
        if !column_missing {
            continue;
        }
        let available = dataset.cells.iter().filter(|c| c.params[j].is_some()).count();
        if available < k {
            return Err(GridError::InsufficientDonors {
                column: (*name).to_string(),
                available,
                k,
            });
        }
    }

    let features = scaled_features(dataset);

    let filled: Vec<Option<[Option<f64>; N_PARAMS]>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cell = &dataset.cells[i];
            if cell.n_missing() == 0 {
                return None;
            }
            let dist: Vec<f64> = (0..n)
                .map(|j| {
                    if j == i {
                        f64::INFINITY
                    } else {
                        nan_euclidean(&features[i], &features[j])
                    }
                })
                .collect();
            let mut params = cell.params;
            for (col, slot) in params.iter_mut().enumerate() {
                if slot.is_some() {
                    continue;
                }
                let mut donors: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i && dataset.cells[j].params[col].is_some())
                    .map(|j| (dist[j], j))
                    .filter(|(d, _)| d.is_finite())
                    .collect();
                let take = k.min(donors.len());
                if take == 0 {
                    continue;
                }
                let by_distance = |a: &(f64, usize), b: &(f64, usize)| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                };
                if take < donors.len() {
                    donors.select_nth_unstable_by(take - 1, by_distance);
                    donors.truncate(take);
                }
                donors.sort_unstable_by(by_distance);
                let value = |j: usize| dataset.cells[j].params[col].unwrap();
                let exact: Vec<f64> = donors
                    .iter()
                    .filter(|(d, _)| *d == 0.0)
                    .map(|&(_, j)| value(j))
                    .collect();
                *slot = Some(if !exact.is_empty() {
                    exact.iter().sum::<f64>() / exact.len() as f64
                } else {
                    let (num, den) = donors.iter().fold((0.0, 0.0), |(num, den), &(d, j)| {
                        (num + value(j) / d, den + 1.0 / d)
                    });
                    num / den
                });
            }
            Some(params)
        })
        .collect();

    let mut out = dataset.clone();
    for (cell, params) in out.cells.iter_mut().zip(filled) {
        if let Some(params) = params {
            let imputed = cell.params.iter().filter(|p| p.is_none()).count();
            cell.params = params;
            cell.imputed = 100.0 * imputed as f64 / N_PARAMS as f64;
        }
    }
    Ok(out)
}

/// Nine min-max scaled features per cell; `None` for a missing parameter.
fn scaled_features(dataset: &GridDataset) -> Vec<[Option<f64>; N_FEATURES]> {
    let raw: Vec<[Option<f64>; N_FEATURES]> = dataset
        .cells
        .iter()
        .map(|c| {
            let mut f = [None; N_FEATURES];
            f[..N_PARAMS].copy_from_slice(&c.params);
            f[N_PARAMS] = Some(c.latitude);
            f[N_PARAMS + 1] = Some(c.longitude);
            f[N_PARAMS + 2] = Some(c.lev_m);
            f
        })
        .collect();
    let mut lo = [f64::INFINITY; N_FEATURES];
    let mut hi = [f64::NEG_INFINITY; N_FEATURES];
    for f in &raw {
        for (j, v) in f.iter().enumerate() {
            if let Some(v) = v {
                lo[j] = lo[j].min(*v);
                hi[j] = hi[j].max(*v);
            }
        }
    }
    raw.into_iter()
        .map(|f| {
            let mut s = f;
            for (j, v) in s.iter_mut().enumerate() {
                if let Some(x) = v {
                    let r = hi[j] - lo[j];
                    *x = if r > 0.0 { (*x - lo[j]) / r } else { 0.0 };
                }
            }
            s
        })
        .collect()
}

fn nan_euclidean(a: &[Option<f64>; N_FEATURES], b: &[Option<f64>; N_FEATURES]) -> f64 {
    let mut sum = 0.0;
    let mut used = 0usize;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            sum += (x - y) * (x - y);
            used += 1;
        }
    }
    if used == 0 {
        return f64::INFINITY;
    }
    (sum * N_FEATURES as f64 / used as f64).sqrt()
}
