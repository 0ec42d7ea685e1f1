use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::EnergyConfig;
use crate::featuremaps::FeatureMaps;
use crate::geometry::{fold_angle, folded_difference, Polygon, Polyline};

/// Candidates closer than this are merged, the earlier one kept.
pub const DEDUP_TOLERANCE_DEG: f64 = 0.5;
const BINS: usize = 180;

/// Which angle hypotheses the search considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidatePolicy {
    /// Perpendicular to the centerline plus the mode with all offsets.
    #[default]
    Full,
    /// Perpendicular plus the bare mode.
    NoOffsets,
    /// Mode with offsets only; falls back to perpendicular without a mode.
    NoCenterline,
    /// Perpendicular to the centerline only.
    PerpendicularOnly,
}

/// Mode of the folded predicted angle over `corridor` pixels that carry an
/// angle and positive `dt`, weighting each pixel by its `dt`. Uses 1° bins
/// and returns the centre of the heaviest bin (ties to the smaller angle);
/// `None` when no pixel qualifies.
pub fn extract_angle_mode(maps: &FeatureMaps, corridor: &Polygon) -> Option<f64> {
    let g = maps.spec();
    let (min, max) = corridor.bbox();
    let ((r0, r1), (c0, c1)) = g.index_window(min, max)?;
    let mut hist = [0.0f64; BINS];
    let mut any = false;
    for row in r0..=r1 {
        for col in c0..=c1 {
            let idx = row * g.width_px + col;
            let w = maps.dt.values[idx];
            if !(w > 0.0) {
                continue;
            }
            let Some(a) = maps.angle_at(idx) else {
                continue;
            };
            if !corridor.contains(g.pixel_to_world(row, col)) {
                continue;
            }
            let bin = ((a.to_degrees()).floor() as usize).min(BINS - 1);
            hist[bin] += w as f64;
            any = true;
        }
    }
    if !any {
        return None;
    }
    let mut best = 0;
    for b in 1..BINS {
        if hist[b] > hist[best] {
            best = b;
        }
    }
    Some((best as f64 + 0.5).to_radians())
}

/// Boundary direction perpendicular to the centerline's overall heading.
pub fn perpendicular_angle(cl: &Polyline) -> f64 {
    fold_angle(cl.mean_direction().angle() + PI / 2.0)
}

/// Angle hypotheses in priority order, folded and deduplicated: the
/// perpendicular to the centerline, then `mode + δ` for every configured
/// offset `δ`.
pub fn candidate_angles(cl: &Polyline, mode: Option<f64>, cfg: &EnergyConfig) -> Vec<f64> {
    candidate_angles_with_policy(cl, mode, cfg, CandidatePolicy::Full)
}

pub fn candidate_angles_with_policy(
    cl: &Polyline,
    mode: Option<f64>,
    cfg: &EnergyConfig,
    policy: CandidatePolicy,
) -> Vec<f64> {
    let perp = perpendicular_angle(cl);
    let mut raw = Vec::new();
    if policy != CandidatePolicy::NoCenterline {
        raw.push(perp);
    }
    if let Some(m) = mode {
        match policy {
            CandidatePolicy::Full | CandidatePolicy::NoCenterline => {
                raw.extend(cfg.angle_offsets.iter().map(|d| m + d.to_radians()))
            }
            CandidatePolicy::NoOffsets => raw.push(m),
            CandidatePolicy::PerpendicularOnly => {}
        }
    }
    if raw.is_empty() {
        raw.push(perp);
    }
    let tol = DEDUP_TOLERANCE_DEG.to_radians() + 1e-12;
    let mut out: Vec<f64> = Vec::with_capacity(raw.len());
    for a in raw {
        let a = fold_angle(a);
        if !out.iter().any(|b| folded_difference(a, *b).abs() <= tol) {
            out.push(a);
        }
    }
    out
}
