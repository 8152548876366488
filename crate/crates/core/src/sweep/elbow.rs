use super::{Result, SweepError};

/// Changes smaller than this (on the normalised scale) count as flat.
const FLAT: f64 = 1e-12;
/// Candidates closer than this count as tied, so rounding from rescaling
/// cannot reorder them.
const TIE: f64 = 1e-9;

fn normalise(values: &[f64]) -> Option<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return None;
    }
    Some(values.iter().map(|v| (v - lo) / range).collect())
}

/// Index of the sharpest bend: the largest absolute second difference of the
/// curve rescaled to `[0, 1]`. Ties go to the smaller index.
pub fn elbow_1d(curve: &[f64]) -> Result<usize> {
    if curve.len() < 3 {
        return Err(SweepError::InvalidParameter(format!(
            "elbow needs at least 3 points, got {}",
            curve.len()
        )));
    }
    if curve.iter().any(|v| !v.is_finite()) {
        return Err(SweepError::InvalidParameter("curve has non-finite values".into()));
    }
    let c = normalise(curve).ok_or_else(|| SweepError::NoElbow("curve is constant".into()))?;
    let mut best = (0, 0.0);
    for i in 1..c.len() - 1 {
        let bend = (c[i - 1] - 2.0 * c[i] + c[i + 1]).abs();
        if bend > best.1 + TIE {
            best = (i, bend);
        }
    }
    if best.1 <= FLAT {
        return Err(SweepError::NoElbow("curve has no curvature".into()));
    }
    Ok(best.0)
}

/// Cell `(i, j)` of `grid[i][j]` (rows along the first axis) with the steepest
/// gradient. Values and both axes are rescaled to `[0, 1]`; gradients use
/// forward differences, backward on the last row/column. Ties go to the
/// smaller first index, then the smaller second.
pub fn elbow_2d(grid: &[Vec<f64>], axis0: &[f64], axis1: &[f64]) -> Result<(usize, usize)> {
    let (r, c) = (grid.len(), grid.first().map_or(0, Vec::len));
    if r < 2 || c < 2 {
        return Err(SweepError::InvalidParameter("heatmap must be at least 2×2".into()));
    }
    if grid.iter().any(|row| row.len() != c) || axis0.len() != r || axis1.len() != c {
        return Err(SweepError::InvalidParameter("heatmap is not rectangular or axes mismatch".into()));
    }
    let flat: Vec<f64> = grid.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(SweepError::InvalidParameter("heatmap has non-finite values".into()));
    }
    let v = normalise(&flat).ok_or_else(|| SweepError::NoElbow("heatmap is constant".into()))?;
    let a0 = normalise(axis0).ok_or_else(|| SweepError::InvalidParameter("first axis is constant".into()))?;
    let a1 = normalise(axis1).ok_or_else(|| SweepError::InvalidParameter("second axis is constant".into()))?;
    let at = |i: usize, j: usize| v[i * c + j];
    let diff = |lo: usize, hi: usize, axis: &[f64], get: &dyn Fn(usize) -> f64| (get(hi) - get(lo)) / (axis[hi] - axis[lo]);

    let mut best = ((0, 0), 0.0);
    for i in 0..r {
        for j in 0..c {
            let (i0, i1) = if i + 1 < r { (i, i + 1) } else { (i - 1, i) };
            let (j0, j1) = if j + 1 < c { (j, j + 1) } else { (j - 1, j) };
            let g0 = diff(i0, i1, &a0, &|k| at(k, j));
            let g1 = diff(j0, j1, &a1, &|k| at(i, k));
            let g = g0.hypot(g1);
            if g > best.1 + TIE {
                best = ((i, j), g);
            }
        }
    }
    if best.1 <= FLAT {
        return Err(SweepError::NoElbow("heatmap has no gradient".into()));
    }
    Ok(best.0)
}
