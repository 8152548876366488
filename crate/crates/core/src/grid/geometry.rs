use super::{GridError, Result};

/// Mean Earth radius used for cell volumes (spherical Earth).
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Upper boundaries of the twelve depth intervals, metres. Interval `i`
/// spans `DEPTH_BOUNDARIES[i]..DEPTH_BOUNDARIES[i + 1]`, the last ending at 5000 m.
pub const DEPTH_BOUNDARIES: [f64; 13] = [
    0.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 1000.0, 1500.0, 2000.0, 3000.0, 4000.0, 5000.0,
];

/// The `(top, bottom)` interval whose upper boundary is `lev_m`.
pub fn depth_interval(lev_m: f64) -> Option<(f64, f64)> {
    DEPTH_BOUNDARIES
        .windows(2)
        .find(|w| w[0] == lev_m)
        .map(|w| (w[0], w[1]))
}

/// Volume of a spherical-shell sector in m³:
/// `R² · Δλ · (sin φ₂ − sin φ₁) · (bottom − top)`.
///
/// `latitude` is the cell centre; the cell spans `latitude ± lat_width/2`.
pub fn cell_volume(
    latitude: f64,
    lat_width: f64,
    lon_width: f64,
    depth_top: f64,
    depth_bottom: f64,
) -> Result<f64> {
    if !(lat_width > 0.0 && lon_width > 0.0) {
        return Err(GridError::Geometry(format!(
            "cell widths must be positive (lat {lat_width}, lon {lon_width})"
        )));
    }
    if !(depth_top >= 0.0 && depth_bottom > depth_top) {
        return Err(GridError::Geometry(format!(
            "depth interval [{depth_top}, {depth_bottom}] is empty or negative"
        )));
    }
    let lower = latitude - lat_width / 2.0;
    let upper = latitude + lat_width / 2.0;
    if lower < -90.0 || upper > 90.0 || lat_width > 180.0 || lon_width > 360.0 {
        return Err(GridError::Geometry(format!(
            "cell at latitude {latitude} with width {lat_width} crosses a pole"
        )));
    }
    let area = EARTH_RADIUS_M
        * EARTH_RADIUS_M
        * lon_width.to_radians()
        * (upper.to_radians().sin() - lower.to_radians().sin());
    Ok(area * (depth_bottom - depth_top))
}

/// Volume of a 1°×1° cell whose depth interval starts at `lev_m`.
pub fn grid_cell_volume(lev_m: f64, latitude: f64) -> Result<f64> {
    let (top, bottom) = depth_interval(lev_m)
        .ok_or_else(|| GridError::Geometry(format!("{lev_m} m is not a depth boundary")))?;
    cell_volume(latitude, 1.0, 1.0, top, bottom)
}
