//! The 18-column cluster CSV (and its 9-column raw subset).

use std::io::{Read, Write};

use super::geometry::{depth_interval, grid_cell_volume};
use super::{GridBounds, GridCell, GridDataset, GridError, Result, N_PARAMS};
use crate::partition::{Label, NOISE};

/// Header of the cluster file, in emission order.
pub const CLUSTER_CSV_COLUMNS: [&str; 18] = [
    "LEV_M",
    "LATITUDE",
    "LONGITUDE",
    "P_TEMPERATURE",
    "P_SALINITY",
    "P_OXYGEN",
    "P_NITRATE",
    "P_SILICATE",
    "P_PHOSPHATE",
    "e0",
    "e1",
    "e2",
    "volume",
    "label",
    "uncertainty",
    "color",
    "water",
    "imputed",
];

const LEV: usize = 0;
const LAT: usize = 1;
const LON: usize = 2;
const PARAM0: usize = 3;
const E0: usize = 9;
const VOLUME: usize = 12;
const LABEL: usize = 13;
const UNCERTAINTY: usize = 14;
const COLOR: usize = 15;
const WATER: usize = 16;
const IMPUTED: usize = 17;

/// How labels and bounds are interpreted when reading and writing.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvOptions {
    /// Integer that stands for noise in the file (the published file uses 8).
    /// When unset, `-1` is used.
    pub noise_label: Option<Label>,
    /// Cells outside these bounds are rejected. `None` disables the check.
    pub bounds: Option<GridBounds>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            noise_label: None,
            bounds: Some(GridBounds::NORTH_ATLANTIC),
        }
    }
}

impl CsvOptions {
    fn file_noise(&self) -> Label {
        self.noise_label.unwrap_or(NOISE)
    }
}

/// Reads the full 18-column file. Every documented column must be present.
pub fn parse_cluster_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<GridDataset> {
    parse(reader, options, true)
}

/// Reads either the 18-column file or the raw subset (geometry + six
/// parameters). Absent volume is derived from the grid geometry, absent
/// `water` defaults to true and absent `imputed` to 0.
pub fn parse_grid_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<GridDataset> {
    parse(reader, options, false)
}

fn parse<R: Read>(reader: R, options: &CsvOptions, strict: bool) -> Result<GridDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    // position in file for each documented column
    let mut index: [Option<usize>; 18] = [None; 18];
    for (pos, name) in headers.iter().enumerate() {
        let col = CLUSTER_CSV_COLUMNS
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| GridError::UnknownColumn(name.to_string()))?;
        if index[col].is_some() {
            return Err(GridError::Invalid {
                line: 1,
                message: format!("column `{name}` appears twice"),
            });
        }
        index[col] = Some(pos);
    }
    let required = if strict { 18 } else { PARAM0 + N_PARAMS };
    for (col, pos) in index.iter().enumerate().take(required) {
        if pos.is_none() {
            return Err(GridError::MissingColumn(CLUSTER_CSV_COLUMNS[col].to_string()));
        }
    }

    let mut cells = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let field = |col: usize| -> Option<&str> {
            index[col]
                .and_then(|p| record.get(p))
                .filter(|s| !s.is_empty())
        };
        let real = |col: usize| -> Result<Option<f64>> {
            field(col)
                .map(|s| {
                    s.parse::<f64>().map_err(|_| GridError::Parse {
                        line,
                        column: CLUSTER_CSV_COLUMNS[col].to_string(),
                        value: s.to_string(),
                    })
                })
                .transpose()
        };
        let required_real = |col: usize| -> Result<f64> {
            real(col)?.ok_or_else(|| GridError::EmptyField {
                line,
                column: CLUSTER_CSV_COLUMNS[col].to_string(),
            })
        };

        let lev_m = required_real(LEV)?;
        let latitude = required_real(LAT)?;
        let longitude = required_real(LON)?;
        if depth_interval(lev_m).is_none() {
            return Err(GridError::Invalid {
                line,
                message: format!("LEV_M {lev_m} is not one of the twelve depth boundaries"),
            });
        }
        if let Some(b) = &options.bounds {
            if !b.contains(lev_m, latitude, longitude) {
                return Err(GridError::Invalid {
                    line,
                    message: format!(
                        "cell (lev_m={lev_m}, lat={latitude}, lon={longitude}) outside bounds"
                    ),
                });
            }
        }

        let mut params = [None; N_PARAMS];
        for (k, p) in params.iter_mut().enumerate() {
            *p = real(PARAM0 + k)?;
        }
        let mut embedding = [None; 3];
        for (k, e) in embedding.iter_mut().enumerate() {
            *e = real(E0 + k)?;
        }

        let water = match field(WATER) {
            None if strict => {
                return Err(GridError::EmptyField {
                    line,
                    column: "water".into(),
                })
            }
            None => true,
            Some(s) => parse_bool(s).ok_or_else(|| GridError::Parse {
                line,
                column: "water".into(),
                value: s.to_string(),
            })?,
        };
        let volume = match real(VOLUME)? {
            Some(v) => v,
            None if strict => {
                return Err(GridError::EmptyField {
                    line,
                    column: "volume".into(),
                })
            }
            None => grid_cell_volume(lev_m, latitude)?,
        };
        if water && !(volume > 0.0) {
            return Err(GridError::Invalid {
                line,
                message: format!("water cell has non-positive volume {volume}"),
            });
        }

        let label = match field(LABEL) {
            None => None,
            Some(s) => {
                let v = parse_label(s).ok_or_else(|| GridError::Parse {
                    line,
                    column: "label".into(),
                    value: s.to_string(),
                })?;
                if v == options.file_noise() {
                    Some(NOISE)
                } else if v < 0 {
                    return Err(GridError::Invalid {
                        line,
                        message: format!("negative label {v} is not the noise label"),
                    });
                } else {
                    Some(v)
                }
            }
        };

        let uncertainty = real(UNCERTAINTY)?;
        if let Some(u) = uncertainty {
            if !(0.0..=100.0).contains(&u) {
                return Err(GridError::Invalid {
                    line,
                    message: format!("uncertainty {u} outside [0, 100]"),
                });
            }
        }
        let imputed = match real(IMPUTED)? {
            Some(v) => v,
            None if strict => {
                return Err(GridError::EmptyField {
                    line,
                    column: "imputed".into(),
                })
            }
            None => 0.0,
        };
        if !(0.0..=100.0).contains(&imputed) {
            return Err(GridError::Invalid {
                line,
                message: format!("imputed {imputed} outside [0, 100]"),
            });
        }

        cells.push(GridCell {
            lev_m,
            latitude,
            longitude,
            params,
            embedding,
            volume,
            label,
            uncertainty,
            color: field(COLOR).map(str::to_string),
            water,
            imputed,
        });
    }
    GridDataset::new(cells, options.bounds)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "t" | "yes" => Some(true),
        "0" | "0.0" | "false" | "f" | "no" => Some(false),
        _ => None,
    }
}

fn parse_label(s: &str) -> Option<Label> {
    if let Ok(v) = s.parse::<Label>() {
        return Some(v);
    }
    // pandas writes integer columns with NaNs as floats, e.g. "8.0"
    let f = s.parse::<f64>().ok()?;
    (f.fract() == 0.0 && f.abs() < 1e15).then_some(f as Label)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes all 18 columns. Unset optional fields become empty strings and
/// [`NOISE`] is written as the configured noise integer.
pub fn write_cluster_csv<W: Write>(
    dataset: &GridDataset,
    writer: W,
    options: &CsvOptions,
) -> Result<()> {
    let file_noise = options.file_noise();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CLUSTER_CSV_COLUMNS)?;
    let mut row: Vec<String> = Vec::with_capacity(18);
    for cell in &dataset.cells {
        row.clear();
        row.push(cell.lev_m.to_string());
        row.push(cell.latitude.to_string());
        row.push(cell.longitude.to_string());
        row.extend(cell.params.iter().map(|p| fmt_opt(*p)));
        row.extend(cell.embedding.iter().map(|e| fmt_opt(*e)));
        row.push(cell.volume.to_string());
        row.push(match cell.label {
            None => String::new(),
            Some(NOISE) => file_noise.to_string(),
            Some(l) if l == file_noise => return Err(GridError::LabelCollision(l)),
            Some(l) => l.to_string(),
        });
        row.push(fmt_opt(cell.uncertainty));
        row.push(cell.color.clone().unwrap_or_default());
        row.push(if cell.water { "True" } else { "False" }.to_string());
        row.push(cell.imputed.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
