//! Crosswalk drawing by exact energy maximization.
//!
//! For every road the search fixes a boundary direction β from a short list
//! of hypotheses, slices the feature maps across the road at every position
//! of a window beyond the intersection, and picks the pair of positions
//! `(s1, s2)` maximizing
//!
//! ```text
//! E = λ·Σ_{s1 < t ≤ s2} seg(t)·Δs + (1 − λ)·(dt(s1) + dt(s2))
//! ```
//!
//! where `seg` is the signed slice score `2p − 1` and `dt` the normalized
//! slice mean of the inverse distance transform.

mod accumulator;
mod angles;
mod energy;
mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featuremaps::FeatureMaps;
use crate::geometry::{crosswalk_polygon, Polygon};
use crate::scene::{CoarseMap, RoadCenterline};

pub use accumulator::{build_accumulator, Accumulator1D, MIN_SLICE_ANGLE_DEG};
pub use angles::{
    candidate_angles, candidate_angles_with_policy, extract_angle_mode, perpendicular_angle, CandidatePolicy,
    DEDUP_TOLERANCE_DEG,
};
pub use energy::{maximize_energy, maximize_energy_brute_force, EnergyMax};
pub use io::{load_predictions, predictions_from_str, predictions_to_string, save_predictions, PREDICTION_VERSION};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("slice direction {beta} is within 5 degrees of road {road_id}")]
    SliceDegenerate { road_id: String, beta: f64 },
    #[error("empty search corridor: {0}")]
    EmptyCorridor(String),
    #[error("search window spans {span} m, shorter than min_width {min_width} m")]
    WindowTooShort { span: f64, min_width: f64 },
    #[error("grid mismatch: feature maps are {maps_w}x{maps_h} but the scene grid is {grid_w}x{grid_h}")]
    GridMismatch {
        maps_w: usize,
        maps_h: usize,
        grid_w: usize,
        grid_h: usize,
    },
    #[error("invalid energy config: {0}")]
    InvalidConfig(String),
    #[error("prediction file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, InferenceError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// Weight of the segmentation term; `1 − lambda_i` weighs the boundary
    /// term.
    pub lambda_i: f64,
    pub min_width: f64,
    pub max_width: f64,
    pub position_step: f64,
    pub slice_step: f64,
    /// Window length beyond the intersection exit, meters.
    pub search_window: f64,
    /// Minimum mean segmentation probability between the boundaries for a
    /// crosswalk to be reported present.
    pub presence_threshold: f64,
    /// Offsets around the angle mode, degrees.
    pub angle_offsets: Vec<f64>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            lambda_i: 0.05,
            min_width: 1.0,
            max_width: 10.0,
            position_step: 0.04,
            slice_step: 0.04,
            search_window: 15.0,
            presence_threshold: 0.5,
            angle_offsets: vec![-5.0, -2.0, 0.0, 2.0, 5.0],
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(InferenceError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.lambda_i) {
            return bad(format!("lambda_i {} outside [0, 1]", self.lambda_i));
        }
        if !(self.min_width > 0.0 && self.min_width < self.max_width && self.max_width.is_finite()) {
            return bad(format!("need 0 < min_width < max_width, got {} / {}", self.min_width, self.max_width));
        }
        if !(self.position_step > 0.0 && self.slice_step > 0.0) {
            return bad("steps must be positive".into());
        }
        if !(self.search_window > 0.0 && self.search_window.is_finite()) {
            return bad(format!("search_window {}", self.search_window));
        }
        if !self.presence_threshold.is_finite() || self.angle_offsets.iter().any(|d| !d.is_finite()) {
            return bad("non-finite threshold or offset".into());
        }
        Ok(())
    }
}

/// Result for one road. When the search could not run at all (every angle
/// hypothesis degenerate or outside the raster) `polygon` is `None` and
/// `present` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosswalkPrediction {
    pub road_id: String,
    pub s1: f64,
    pub s2: f64,
    pub beta: f64,
    pub energy: f64,
    pub present: bool,
    pub polygon: Option<Polygon>,
    /// Mode of the predicted angle field along the road, if any.
    pub angle_mode: Option<f64>,
}

/// Searches one road under `policy`.
pub fn infer_road(
    maps: &FeatureMaps,
    road: &RoadCenterline,
    intersection: &Polygon,
    cfg: &EnergyConfig,
    policy: CandidatePolicy,
) -> CrosswalkPrediction {
    let perp = perpendicular_angle(&road.centerline);
    let mut out = CrosswalkPrediction {
        road_id: road.id.clone(),
        s1: 0.0,
        s2: 0.0,
        beta: perp,
        energy: 0.0,
        present: false,
        polygon: None,
        angle_mode: None,
    };
    let Ok(start) = accumulator::window_start(road, intersection) else {
        return out;
    };
    let positions = accumulator::search_positions(&road.centerline, start, cfg, maps.spec());
    let Some(&end) = positions.last() else {
        return out;
    };
    let mode = road
        .centerline
        .corridor(start, end, road.half_width())
        .ok()
        .and_then(|c| extract_angle_mode(maps, &c));
    out.angle_mode = mode;

    let mut best: Option<(EnergyMax, f64, Accumulator1D)> = None;
    for beta in candidate_angles_with_policy(&road.centerline, mode, cfg, policy) {
        let Ok(acc) = build_accumulator(maps, road, intersection, beta, cfg) else {
            continue;
        };
        let Ok(m) = maximize_energy(&acc, cfg) else {
            continue;
        };
        if best.as_ref().map_or(true, |(b, _, _)| m.energy > b.energy) {
            best = Some((m, beta, acc));
        }
    }
    if let Some((m, beta, acc)) = best {
        out.s1 = m.s1;
        out.s2 = m.s2;
        out.beta = beta;
        out.energy = m.energy;
        out.present = acc.mean_prob(m.i1, m.i2) >= cfg.presence_threshold;
        out.polygon = crosswalk_polygon(&road.centerline, m.s1, m.s2, beta, road.half_width()).ok();
        if out.polygon.is_none() {
            out.present = false;
        }
    }
    out
}

/// One prediction per road, in road order, using every angle hypothesis.
pub fn infer_scene(map: CoarseMap<'_>, maps: &FeatureMaps, cfg: &EnergyConfig) -> Result<Vec<CrosswalkPrediction>> {
    infer_scene_with_policy(map, maps, cfg, CandidatePolicy::Full)
}

pub fn infer_scene_with_policy(
    map: CoarseMap<'_>,
    maps: &FeatureMaps,
    cfg: &EnergyConfig,
    policy: CandidatePolicy,
) -> Result<Vec<CrosswalkPrediction>> {
    cfg.validate()?;
    let g = maps.spec();
    if maps.channels().iter().any(|c| c.spec != *g) || g != map.grid {
        return Err(InferenceError::GridMismatch {
            maps_w: g.width_px,
            maps_h: g.height_px,
            grid_w: map.grid.width_px,
            grid_h: map.grid.height_px,
        });
    }
    Ok(map
        .roads
        .iter()
        .map(|r| infer_road(maps, r, map.intersection, cfg, policy))
        .collect())
}
