use super::{EnergyConfig, InferenceError, Result};
use crate::featuremaps::{FeatureMaps, DT_THRESHOLD_PX};
use crate::geometry::{folded_difference, sample_slice, Polygon, Polyline};
use crate::scene::RoadCenterline;

/// Slices closer than this to the centerline direction are rejected.
pub const MIN_SLICE_ANGLE_DEG: f64 = 5.0;

/// Per-position slice statistics along one road for one boundary angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator1D {
    /// Arclengths `s_t = s_0 + t·step`.
    pub positions: Vec<f64>,
    pub step: f64,
    /// Mean signed score `2·seg − 1` over the slice samples.
    pub slice_seg: Vec<f64>,
    /// Mean `dt / 30` over the slice samples.
    pub slice_dt: Vec<f64>,
    /// `prefix_seg[t] = Σ_{k ≤ t} slice_seg[k]·step`.
    pub prefix_seg: Vec<f64>,
    /// Mean raw segmentation probability over the slice samples.
    pub slice_prob: Vec<f64>,
}

impl Accumulator1D {
    /// Builds an accumulator from precomputed slice means. `slice_prob` is
    /// derived from the signed score.
    pub fn from_slices(start: f64, step: f64, slice_seg: Vec<f64>, slice_dt: Vec<f64>) -> Self {
        assert_eq!(slice_seg.len(), slice_dt.len());
        let slice_prob = slice_seg.iter().map(|s| 0.5 * (s + 1.0)).collect();
        Self::assemble(start, step, slice_seg, slice_dt, slice_prob)
    }

    fn assemble(start: f64, step: f64, slice_seg: Vec<f64>, slice_dt: Vec<f64>, slice_prob: Vec<f64>) -> Self {
        let n = slice_seg.len();
        let positions = (0..n).map(|t| start + t as f64 * step).collect();
        let mut prefix_seg = Vec::with_capacity(n);
        let mut acc = 0.0;
        for s in &slice_seg {
            acc += s * step;
            prefix_seg.push(acc);
        }
        Self {
            positions,
            step,
            slice_seg,
            slice_dt,
            prefix_seg,
            slice_prob,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Distance between the first and last position.
    pub fn span(&self) -> f64 {
        match (self.positions.first(), self.positions.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Mean of `slice_prob` over positions `i..=j`.
    pub fn mean_prob(&self, i: usize, j: usize) -> f64 {
        self.slice_prob[i..=j].iter().sum::<f64>() / (j - i + 1) as f64
    }
}

/// Start of the search window: where the centerline leaves the
/// intersection.
pub(crate) fn window_start(road: &RoadCenterline, intersection: &Polygon) -> Result<f64> {
    road.exit_arclength(intersection)
        .ok_or_else(|| InferenceError::EmptyCorridor(format!("road {} never leaves the intersection", road.id)))
}

/// Search positions `[exit, exit + search_window]`, truncated where the
/// centerline ends or leaves the raster.
pub(crate) fn search_positions(
    cl: &Polyline,
    start: f64,
    cfg: &EnergyConfig,
    g: &crate::geometry::GridSpec,
) -> Vec<f64> {
    let n = (cfg.search_window / cfg.position_step + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let s = start + t as f64 * cfg.position_step;
        if s > cl.length() + 1e-9 || !g.contains(cl.point_at(s)) {
            break;
        }
        out.push(s);
    }
    out
}

/// Slices the maps across `road` at every search position along boundary
/// direction `beta`. Each slice is clipped to the road corridor (the
/// centerline ± half the road width, extended one road width past both ends
/// of the window so oblique slices are not cut short).
pub fn build_accumulator(
    maps: &FeatureMaps,
    road: &RoadCenterline,
    intersection: &Polygon,
    beta: f64,
    cfg: &EnergyConfig,
) -> Result<Accumulator1D> {
    let g = maps.spec();
    let cl = &road.centerline;
    let start = window_start(road, intersection)?;
    let positions = search_positions(cl, start, cfg, g);
    if positions.len() < 2 {
        return Err(InferenceError::EmptyCorridor(format!(
            "search window of road {} lies outside the raster",
            road.id
        )));
    }
    let end = *positions.last().unwrap();
    let axis = (cl.point_at(end) - cl.point_at(start)).angle();
    if folded_difference(beta, axis).abs() < MIN_SLICE_ANGLE_DEG.to_radians() {
        return Err(InferenceError::SliceDegenerate {
            road_id: road.id.clone(),
            beta,
        });
    }
    let corridor = cl
        .corridor(start - road.width, end + road.width, road.half_width())
        .map_err(|e| InferenceError::EmptyCorridor(e.to_string()))?;

    let t = DT_THRESHOLD_PX as f64;
    let n = positions.len();
    let mut slice_seg = Vec::with_capacity(n);
    let mut slice_dt = Vec::with_capacity(n);
    let mut slice_prob = Vec::with_capacity(n);
    for &s in &positions {
        let pts = sample_slice(cl.point_at(s), beta, &corridor, g, cfg.slice_step);
        let (mut sp, mut sd, mut k) = (0.0, 0.0, 0usize);
        for p in pts {
            if let (Some(a), Some(b)) = (maps.seg.sample_bilinear(p), maps.dt.sample_bilinear(p)) {
                sp += a;
                sd += b;
                k += 1;
            }
        }
        if k == 0 {
            slice_seg.push(0.0);
            slice_dt.push(0.0);
            slice_prob.push(0.0);
        } else {
            let kf = k as f64;
            slice_prob.push(sp / kf);
            slice_seg.push(2.0 * (sp / kf) - 1.0);
            slice_dt.push(sd / kf / t);
        }
    }
    Ok(Accumulator1D::assemble(
        start,
        cfg.position_step,
        slice_seg,
        slice_dt,
        slice_prob,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featuremaps::{render_oracle, Grid};
    use crate::geometry::{crosswalk_polygon, fold_angle, GridSpec, Point2};
    use crate::scene::{CrosswalkGT, Scene};
    use std::f64::consts::PI;

    fn straight_scene(beta: f64) -> Scene {
        let grid = GridSpec::new(Point2::new(-6.0, -6.0), 0.04, 700, 300).unwrap();
        let intersection = Polygon::rectangle(Point2::new(-5.0, -5.0), Point2::new(3.0, 5.0)).unwrap();
        let centerline = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(40.0, 0.0)]).unwrap();
        let polygon = crosswalk_polygon(&centerline, 6.0, 9.0, beta, 3.0).unwrap();
        Scene {
            grid,
            intersection,
            roads: vec![RoadCenterline {
                id: "r0".into(),
                centerline,
                width: 6.0,
            }],
            crosswalks: vec![CrosswalkGT {
                road_id: "r0".into(),
                s1: 6.0,
                s2: 9.0,
                beta: fold_angle(beta),
                polygon,
            }],
        }
    }

    fn constant_maps(spec: GridSpec, seg: f32) -> FeatureMaps {
        let mut m = FeatureMaps::zeros(spec);
        m.seg = Grid::filled(spec, seg);
        m
    }

    #[test]
    fn half_probability_gives_zero_score() {
        let s = straight_scene(PI / 2.0);
        let m = constant_maps(s.grid, 0.5);
        let acc = build_accumulator(&m, &s.roads[0], &s.intersection, PI / 2.0, &EnergyConfig::default()).unwrap();
        assert!(acc.slice_seg.iter().all(|v| *v == 0.0));
        assert!(acc.prefix_seg.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn full_probability_gives_linear_prefix() {
        let s = straight_scene(PI / 2.0);
        let m = constant_maps(s.grid, 1.0);
        let cfg = EnergyConfig::default();
        let acc = build_accumulator(&m, &s.roads[0], &s.intersection, PI / 2.0 + 0.2, &cfg).unwrap();
        assert_eq!(acc.positions[0], 3.0);
        let t0 = acc.positions[0];
        for (p, s) in acc.prefix_seg.iter().zip(&acc.positions) {
            assert!((p - (s - t0 + cfg.position_step)).abs() < 1e-9);
        }
        assert_eq!(acc.len(), 376);
        assert!((acc.positions[375] - 18.0).abs() < 1e-9);
    }

    #[test]
    fn window_truncated_at_raster_edge() {
        let mut s = straight_scene(PI / 2.0);
        // Raster ends at x = 13.98 m.
        s.grid = GridSpec::new(Point2::new(-6.0, -6.0), 0.04, 500, 300).unwrap();
        let m = constant_maps(s.grid, 1.0);
        let acc = build_accumulator(&m, &s.roads[0], &s.intersection, PI / 2.0, &EnergyConfig::default()).unwrap();
        let last = *acc.positions.last().unwrap();
        assert!(last < 13.98 && last > 13.9, "{last}");
    }

    #[test]
    fn prefix_differences_equal_contributions() {
        let s = straight_scene(PI / 2.0 + 0.1);
        let m = render_oracle(&s);
        let acc = build_accumulator(&m, &s.roads[0], &s.intersection, PI / 2.0 + 0.1, &EnergyConfig::default()).unwrap();
        assert_eq!(acc.prefix_seg[0], acc.slice_seg[0] * acc.step);
        for t in 1..acc.len() {
            let d = acc.prefix_seg[t] - acc.prefix_seg[t - 1];
            assert!((d - acc.slice_seg[t] * acc.step).abs() < 1e-9);
        }
    }

    #[test]
    fn dt_peaks_at_ground_truth_boundaries() {
        for beta in [PI / 2.0, PI / 2.0 + 0.15] {
            let s = straight_scene(beta);
            let m = render_oracle(&s);
            let acc = build_accumulator(&m, &s.roads[0], &s.intersection, beta, &EnergyConfig::default()).unwrap();
            for gt in [6.0, 9.0] {
                let t = ((gt - acc.positions[0]) / acc.step).round() as usize;
                assert!((acc.slice_dt[t] - 1.0).abs() <= 0.1, "{}", acc.slice_dt[t]);
                let local = acc.slice_dt[t - 5..=t + 5].iter().cloned().fold(0.0, f64::max);
                assert!(acc.slice_dt[t] >= local - 0.02);
            }
        }
    }

    #[test]
    fn near_parallel_slices_rejected() {
        let s = straight_scene(PI / 2.0);
        let m = constant_maps(s.grid, 0.0);
        let r = build_accumulator(&m, &s.roads[0], &s.intersection, 0.03, &EnergyConfig::default());
        assert!(matches!(r, Err(InferenceError::SliceDegenerate { .. })));
        let r = build_accumulator(&m, &s.roads[0], &s.intersection, PI - 0.03, &EnergyConfig::default());
        assert!(matches!(r, Err(InferenceError::SliceDegenerate { .. })));
    }

    #[test]
    fn window_outside_raster_is_empty_corridor() {
        let mut s = straight_scene(PI / 2.0);
        s.grid = GridSpec::new(Point2::new(-6.0, -6.0), 0.04, 100, 300).unwrap();
        let m = constant_maps(s.grid, 0.0);
        let r = build_accumulator(&m, &s.roads[0], &s.intersection, PI / 2.0, &EnergyConfig::default());
        assert!(matches!(r, Err(InferenceError::EmptyCorridor(_))));
    }
}
