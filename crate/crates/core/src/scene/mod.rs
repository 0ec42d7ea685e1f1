//! Scene data model: the coarse map (grid, intersection polygon, road
//! centerlines) bundled with ground-truth crosswalks, plus a deterministic
//! synthetic generator and file I/O.

mod generate;
mod io;

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{crosswalk_polygon, GeometryError, GridSpec, Polygon, Polyline};

pub use generate::{generate_scene, GeneratorConfig, Range};
pub use io::{load_scene, save_scene, scene_from_str, scene_to_string, SCENE_VERSION};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("parse error at line {line}, field `{field}`: {message}")]
    ParseError {
        line: usize,
        field: String,
        message: String,
    },
    #[error("unsupported scene version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u64 },
    #[error("scene generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SceneError>;

/// A road approach from the coarse map, oriented away from the intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadCenterline {
    pub id: String,
    pub centerline: Polyline,
    pub width: f64,
}

impl RoadCenterline {
    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    /// Arclength at which the centerline leaves `intersection` for the last
    /// time, or `None` if it never crosses the boundary.
    pub fn exit_arclength(&self, intersection: &Polygon) -> Option<f64> {
        let cum = self.centerline.vertex_arclengths();
        let mut best: Option<f64> = None;
        for (i, seg) in self.centerline.segments().enumerate() {
            let len = seg.length();
            let dir = (seg.b - seg.a) * (1.0 / len);
            for u in intersection.line_crossings(seg.a, dir) {
                if (-1e-12..=len + 1e-12).contains(&u) {
                    let s = (cum[i] + u.clamp(0.0, len)).min(self.centerline.length());
                    best = Some(best.map_or(s, |b: f64| b.max(s)));
                }
            }
        }
        best
    }
}

/// A ground-truth crosswalk annotation attached to one road.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosswalkGT {
    pub road_id: String,
    pub s1: f64,
    pub s2: f64,
    /// Boundary direction, folded into `[0, π)`.
    pub beta: f64,
    pub polygon: Polygon,
}

/// Coarse map plus annotations for one intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub grid: GridSpec,
    pub intersection: Polygon,
    pub roads: Vec<RoadCenterline>,
    pub crosswalks: Vec<CrosswalkGT>,
}

/// The inference-time inputs: everything in a [`Scene`] except ground truth.
#[derive(Debug, Clone, Copy)]
pub struct CoarseMap<'a> {
    pub grid: &'a GridSpec,
    pub intersection: &'a Polygon,
    pub roads: &'a [RoadCenterline],
}

impl Scene {
    pub fn coarse_map(&self) -> CoarseMap<'_> {
        CoarseMap {
            grid: &self.grid,
            intersection: &self.intersection,
            roads: &self.roads,
        }
    }

    pub fn road(&self, id: &str) -> Option<&RoadCenterline> {
        self.roads.iter().find(|r| r.id == id)
    }

    pub fn crosswalk_for(&self, road_id: &str) -> Option<&CrosswalkGT> {
        self.crosswalks.iter().find(|c| c.road_id == road_id)
    }

    /// Checks the cross-record invariants. Errors carry a field path such as
    /// `crosswalks[2].road_id`.
    pub fn validate(&self) -> std::result::Result<(), (String, String)> {
        let mut ids = HashSet::new();
        for (i, r) in self.roads.iter().enumerate() {
            if !ids.insert(r.id.as_str()) {
                return Err((format!("roads[{i}].id"), format!("duplicate road id '{}'", r.id)));
            }
            if !(r.width > 0.0 && r.width.is_finite()) {
                return Err((format!("roads[{i}].width"), format!("width {} must be positive", r.width)));
            }
            if !self.intersection.contains(r.centerline.vertices()[0]) {
                return Err((
                    format!("roads[{i}].centerline"),
                    "centerline must start inside the intersection".into(),
                ));
            }
        }
        let mut used = HashSet::new();
        for (i, c) in self.crosswalks.iter().enumerate() {
            let Some(road) = self.road(&c.road_id) else {
                return Err((
                    format!("crosswalks[{i}].road_id"),
                    format!("unknown road '{}'", c.road_id),
                ));
            };
            if !used.insert(c.road_id.as_str()) {
                return Err((
                    format!("crosswalks[{i}].road_id"),
                    format!("second crosswalk on road '{}'", c.road_id),
                ));
            }
            if !(c.s1 >= 0.0 && c.s1 < c.s2) {
                return Err((format!("crosswalks[{i}].s1"), format!("need 0 <= s1 < s2, got {} / {}", c.s1, c.s2)));
            }
            if !(0.0..PI).contains(&c.beta) {
                return Err((format!("crosswalks[{i}].beta"), format!("beta {} outside [0, pi)", c.beta)));
            }
            let expected = crosswalk_polygon(&road.centerline, c.s1, c.s2, c.beta, road.half_width())
                .map_err(|e| (format!("crosswalks[{i}]"), e.to_string()))?;
            let matches = expected.vertices().len() == c.polygon.vertices().len()
                && expected
                    .vertices()
                    .iter()
                    .zip(c.polygon.vertices())
                    .all(|(a, b)| a.distance(*b) <= 1e-6);
            if !matches {
                return Err((
                    format!("crosswalks[{i}].polygon"),
                    "polygon disagrees with (s1, s2, beta, road width)".into(),
                ));
            }
        }
        Ok(())
    }
}
