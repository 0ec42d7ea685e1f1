use super::{FeatureMaps, ANGLE_DILATION_PX, DT_THRESHOLD_PX};
use crate::geometry::{crosswalk_boundaries, fill_polygon, fold_angle, Point2, Segment};
use crate::scene::Scene;

/// Ground-truth feature maps for `scene`.
///
/// `seg` is the union of the crosswalk polygons. `dt` is
/// `max(0, 30 - D)` where `D` is the pixel distance to the nearest crossing
/// boundary (the edges through `s1` and `s2`; lateral edges are ignored).
/// Within 15 px of a boundary the angle channels hold the unit vector of the
/// owning crosswalk's folded `beta`. Where bands overlap the nearest
/// boundary wins, ties going to the lower road id.
pub fn render_oracle(scene: &Scene) -> FeatureMaps {
    let g = scene.grid;
    let mut maps = FeatureMaps::zeros(g);
    let mut order: Vec<_> = scene.crosswalks.iter().collect();
    order.sort_by(|a, b| a.road_id.cmp(&b.road_id));

    for c in &order {
        fill_polygon(&mut maps.seg, &c.polygon, 1.0);
    }

    let res = g.resolution;
    let reach = DT_THRESHOLD_PX as f64 * res;
    let radius_px = 0.5 * ANGLE_DILATION_PX;
    let mut best = vec![f64::INFINITY; g.len()];
    for c in &order {
        let Some(bounds) = crosswalk_boundaries(&c.polygon) else {
            continue;
        };
        let beta = fold_angle(c.beta);
        let (ax, ay) = (beta.cos() as f32, beta.sin() as f32);
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in &bounds {
            for p in [s.a, s.b] {
                lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        let pad = Point2::new(reach, reach);
        let Some(((r0, r1), (c0, c1))) = g.index_window(lo - pad, hi + pad) else {
            continue;
        };
        for row in r0..=r1 {
            for col in c0..=c1 {
                let p = g.pixel_to_world(row, col);
                let d = nearest(&bounds, p) / res;
                let idx = row * g.width_px + col;
                if d < best[idx] {
                    best[idx] = d;
                    if d <= radius_px {
                        maps.angle_x.values[idx] = ax;
                        maps.angle_y.values[idx] = ay;
                        maps.angle_mask.values[idx] = 1.0;
                    }
                }
            }
        }
    }
    let t = DT_THRESHOLD_PX as f64;
    for (v, d) in maps.dt.values.iter_mut().zip(&best) {
        if d.is_finite() {
            *v = (t - d).max(0.0) as f32;
        }
    }
    maps
}

fn nearest(bounds: &[Segment; 2], p: Point2) -> f64 {
    bounds[0].distance_to(p).min(bounds[1].distance_to(p))
}
