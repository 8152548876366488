//! Reading inputs and writing artifacts. Files are written under a
//! `.partial` name and renamed once complete, so a failed stage leaves its
//! incomplete output clearly marked.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use watermass::grid::{min_max_scale, parse_grid_csv, write_cluster_csv, CsvOptions, FeatureMatrix};
use watermass::GridDataset;

use crate::error::{CliError, Result, StageExt};

pub fn csv_options(noise_label: i64) -> CsvOptions {
    CsvOptions {
        noise_label: Some(noise_label),
        bounds: None,
    }
}

pub fn read_dataset(path: &Path, noise_label: i64) -> Result<GridDataset> {
    let file = File::open(path).map_err(|e| CliError::data("read", format!("{}: {e}", path.display())))?;
    parse_grid_csv(file, &csv_options(noise_label)).map_err(|e| CliError::data("read", format!("{}: {e}", path.display())))
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes through `f` to `path.partial`, then renames to `path`.
pub fn write_atomic<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).stage("write")?;
    }
    let tmp = partial_path(path);
    let mut w = BufWriter::new(File::create(&tmp).stage("write")?);
    f(&mut w)?;
    w.flush().stage("write")?;
    drop(w);
    fs::rename(&tmp, path).stage("write")
}

pub fn write_dataset(path: &Path, ds: &GridDataset, noise_label: i64) -> Result<()> {
    write_atomic(path, |w| write_cluster_csv(ds, w, &csv_options(noise_label)).stage("write"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()).stage("write"))
}

/// Min-max scaled parameters; refuses incomplete data.
pub fn scaled_features(ds: &GridDataset) -> Result<FeatureMatrix> {
    let fm = ds.feature_matrix();
    if fm.has_missing() {
        return Err(CliError::data("scale", "parameters have missing values; run `impute` first"));
    }
    Ok(min_max_scale(&fm).stage("scale")?.0)
}

pub fn write_features(path: &Path, ds: &GridDataset, fm: &FeatureMatrix) -> Result<()> {
    write_atomic(path, |w| {
        let mut c = csv::Writer::from_writer(w);
        let mut header = vec!["LEV_M".to_string(), "LATITUDE".into(), "LONGITUDE".into()];
        header.extend(fm.column_names.iter().cloned());
        c.write_record(&header).stage("write")?;
        for (cell, row) in ds.cells.iter().zip(fm.values.rows()) {
            let mut rec = vec![cell.lev_m.to_string(), cell.latitude.to_string(), cell.longitude.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            c.write_record(&rec).stage("write")?;
        }
        c.flush().stage("write")
    })
}
