use super::{FeatureMatrix, GridError, Result};

/// Per-column minimum and maximum from a min-max fit.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    /// Fits on the non-missing entries of each column.
    pub fn fit(matrix: &FeatureMatrix) -> Result<Self> {
        let d = matrix.ncols();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for ((i, j), &v) in matrix.values.indexed_iter() {
            if matrix.missing[[i, j]] {
                continue;
            }
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
        for j in 0..d {
            if min[j] > max[j] {
                return Err(GridError::AllMissing(matrix.column_names[j].clone()));
            }
        }
        Ok(Self { min, max })
    }

    fn range(&self, j: usize) -> f64 {
        self.max[j] - self.min[j]
    }

    /// `(x - min) / (max - min)`; constant columns map to 0.
    pub fn scale_value(&self, j: usize, v: f64) -> f64 {
        let r = self.range(j);
        if r > 0.0 {
            (v - self.min[j]) / r
        } else {
            0.0
        }
    }

    pub fn unscale_value(&self, j: usize, v: f64) -> f64 {
        v * self.range(j) + self.min[j]
    }

    pub fn apply(&self, matrix: &FeatureMatrix) -> FeatureMatrix {
        self.map(matrix, |j, v| self.scale_value(j, v))
    }

    pub fn unscale(&self, matrix: &FeatureMatrix) -> FeatureMatrix {
        self.map(matrix, |j, v| self.unscale_value(j, v))
    }

    fn map(&self, matrix: &FeatureMatrix, f: impl Fn(usize, f64) -> f64) -> FeatureMatrix {
        let mut out = matrix.clone();
        for ((i, j), v) in out.values.indexed_iter_mut() {
            if !matrix.missing[[i, j]] {
                *v = f(j, *v);
            }
        }
        out
    }
}

/// Scales every column to `[0, 1]`; missing entries stay missing.
pub fn min_max_scale(matrix: &FeatureMatrix) -> Result<(FeatureMatrix, ScalingParams)> {
    let params = ScalingParams::fit(matrix)?;
    Ok((params.apply(matrix), params))
}
