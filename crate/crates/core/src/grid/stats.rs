use super::{GridDataset, N_PARAMS};

/// Summary of one parameter over the non-missing cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStats {
    pub name: String,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub missing_fraction: f64,
}

pub fn dataset_stats(dataset: &GridDataset) -> Vec<ParamStats> {
    (0..N_PARAMS)
        .map(|j| {
            let values: Vec<f64> = dataset.cells.iter().filter_map(|c| c.params[j]).collect();
            let n = dataset.cells.len();
            let missing_fraction = if n == 0 {
                0.0
            } else {
                (n - values.len()) as f64 / n as f64
            };
            let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
            ParamStats {
                name: dataset.parameter_names[j].clone(),
                mean,
                min: values.iter().copied().reduce(f64::min),
                max: values.iter().copied().reduce(f64::max),
                missing_fraction,
            }
        })
        .collect()
}
