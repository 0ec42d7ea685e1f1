use std::fs;
use std::path::Path;

use super::{FeatureMapError, Grid, Result};

/// Quantizes `v` to a gray level: `clamp(round_half_up(255·v/scale), 0, 255)`.
pub fn gray_level(v: f32, scale: f64) -> u8 {
    let x = (255.0 * v as f64 / scale + 0.5).floor();
    x.clamp(0.0, 255.0) as u8
}

/// Writes `grid` as a binary graymap (P5, maxval 255). Rows are written
/// top-down in image order, i.e. with world +y (north) up.
pub fn export_pgm(grid: &Grid, path: impl AsRef<Path>, scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(FeatureMapError::InvalidScale(scale));
    }
    let (w, h) = (grid.width(), grid.height());
    let mut buf = format!("P5\n{w} {h}\n255\n").into_bytes();
    buf.reserve(w * h);
    for row in (0..h).rev() {
        buf.extend(grid.row(row).iter().map(|v| gray_level(*v, scale)));
    }
    fs::write(path, buf)?;
    Ok(())
}
