use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2, Result};

/// Bird's-eye-view raster resolution in meters per pixel.
pub const DEFAULT_RESOLUTION: f64 = 0.04;

/// Placement and size of a raster in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRecord", into = "GridSpecRecord")]
pub struct GridSpec {
    /// World position of the centre of pixel `(0, 0)`.
    pub origin: Point2,
    pub resolution: f64,
    pub width_px: usize,
    pub height_px: usize,
}

#[derive(Serialize, Deserialize)]
struct GridSpecRecord {
    origin_x: f64,
    origin_y: f64,
    resolution: f64,
    width_px: usize,
    height_px: usize,
}

impl TryFrom<GridSpecRecord> for GridSpec {
    type Error = GeometryError;

    fn try_from(r: GridSpecRecord) -> Result<Self> {
        GridSpec::new(
            Point2::new(r.origin_x, r.origin_y),
            r.resolution,
            r.width_px,
            r.height_px,
        )
    }
}

impl From<GridSpec> for GridSpecRecord {
    fn from(g: GridSpec) -> Self {
        GridSpecRecord {
            origin_x: g.origin.x,
            origin_y: g.origin.y,
            resolution: g.resolution,
            width_px: g.width_px,
            height_px: g.height_px,
        }
    }
}

impl GridSpec {
    pub fn new(origin: Point2, resolution: f64, width_px: usize, height_px: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(GeometryError::InvalidGrid("non-finite origin".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(GeometryError::InvalidGrid(format!("resolution {resolution}")));
        }
        if width_px == 0 || height_px == 0 {
            return Err(GeometryError::InvalidGrid("empty raster".into()));
        }
        Ok(Self {
            origin,
            resolution,
            width_px,
            height_px,
        })
    }

    pub fn len(&self) -> usize {
        self.width_px * self.height_px
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    /// Continuous raster coordinates `(col, row)` of a world point; pixel
    /// centres sit on integers.
    pub fn to_raster(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.resolution,
            (p.y - self.origin.y) / self.resolution,
        )
    }

    /// Whether `p` falls inside the rectangle covered by the pixels.
    pub fn contains(&self, p: Point2) -> bool {
        let (u, v) = self.to_raster(p);
        u >= -0.5 && v >= -0.5 && u < self.width_px as f64 - 0.5 && v < self.height_px as f64 - 0.5
    }

    /// Nearest pixel, rounding halves up.
    pub fn world_to_pixel(&self, p: Point2) -> Result<(usize, usize)> {
        if !self.contains(p) {
            return Err(GeometryError::OutOfBounds { x: p.x, y: p.y });
        }
        let (u, v) = self.to_raster(p);
        let col = ((u + 0.5).floor() as usize).min(self.width_px - 1);
        let row = ((v + 0.5).floor() as usize).min(self.height_px - 1);
        Ok((row, col))
    }

    pub fn pixel_to_world(&self, row: usize, col: usize) -> Point2 {
        Point2::new(
            self.origin.x + col as f64 * self.resolution,
            self.origin.y + row as f64 * self.resolution,
        )
    }

    /// World-space rectangle `(min, max)` spanned by the pixel centres.
    pub fn center_extent(&self) -> (Point2, Point2) {
        (
            self.origin,
            self.pixel_to_world(self.height_px - 1, self.width_px - 1),
        )
    }

    /// Inclusive pixel index ranges `(rows, cols)` whose centres fall in the
    /// world-space box, or `None` if the box misses the raster.
    pub fn index_window(&self, min: Point2, max: Point2) -> Option<((usize, usize), (usize, usize))> {
        let (u0, v0) = self.to_raster(min);
        let (u1, v1) = self.to_raster(max);
        let c0 = u0.ceil().max(0.0);
        let r0 = v0.ceil().max(0.0);
        let c1 = u1.floor().min(self.width_px as f64 - 1.0);
        let r1 = v1.floor().min(self.height_px as f64 - 1.0);
        if c0 > c1 || r0 > r1 {
            return None;
        }
        Some(((r0 as usize, r1 as usize), (c0 as usize, c1 as usize)))
    }
}

/// Single-channel raster, row-major, binary32 values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    pub values: Vec<f32>,
}

impl Grid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::filled(spec, 0.0)
    }

    pub fn filled(spec: GridSpec, value: f32) -> Self {
        Self {
            spec,
            values: vec![value; spec.len()],
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f32>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(GeometryError::InvalidGrid(format!(
                "{} values for a {}x{} raster",
                values.len(),
                spec.width_px,
                spec.height_px
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn width(&self) -> usize {
        self.spec.width_px
    }

    pub fn height(&self) -> usize {
        self.spec.height_px
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.spec.width_px + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.values[row * self.spec.width_px + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f32] {
        let w = self.spec.width_px;
        &self.values[row * w..(row + 1) * w]
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.spec.width_px == other.spec.width_px && self.spec.height_px == other.spec.height_px
    }

    /// Bilinear sample at a world point; `None` outside the raster. Points in
    /// the outer half-pixel border are clamped onto the edge pixels.
    pub fn sample_bilinear(&self, p: Point2) -> Option<f64> {
        if !self.spec.contains(p) {
            return None;
        }
        let (u, v) = self.spec.to_raster(p);
        let w = self.spec.width_px;
        let h = self.spec.height_px;
        let u = u.clamp(0.0, (w - 1) as f64);
        let v = v.clamp(0.0, (h - 1) as f64);
        let c0 = (u.floor() as usize).min(w.saturating_sub(2));
        let r0 = (v.floor() as usize).min(h.saturating_sub(2));
        let c1 = (c0 + 1).min(w - 1);
        let r1 = (r0 + 1).min(h - 1);
        let fu = u - c0 as f64;
        let fv = v - r0 as f64;
        let top = self.get(r0, c0) as f64 * (1.0 - fu) + self.get(r0, c1) as f64 * fu;
        let bottom = self.get(r1, c0) as f64 * (1.0 - fu) + self.get(r1, c1) as f64 * fu;
        Some(top * (1.0 - fv) + bottom * fv)
    }
}
