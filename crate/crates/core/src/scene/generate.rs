use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{CrosswalkGT, Result, RoadCenterline, Scene, SceneError};
use crate::geometry::{
    convex_hull, crosswalk_polygon, fold_angle, GridSpec, Point2, Polygon, Polyline, DEFAULT_RESOLUTION,
};
use crate::rng;

const MAX_ATTEMPTS: usize = 100;
/// Minimum angular separation between neighbouring roads.
const MIN_ROAD_SEPARATION_DEG: f64 = 25.0;
/// Extra clearance between neighbouring road corridors at the intersection
/// boundary, meters.
const CORRIDOR_CLEARANCE: f64 = 2.5;
/// Raster margin around everything the grid must cover, meters. Larger than
/// the 1.2 m reach of the inverse distance transform.
const GRID_MARGIN: f64 = 1.5;
/// Centerline length beyond the intersection exit, meters.
const CENTERLINE_REACH: f64 = 40.0;

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.max > self.min {
            rng.gen_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    fn is_valid_positive(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min > 0.0 && self.min <= self.max
    }
}

impl From<[f64; 2]> for Range {
    fn from(v: [f64; 2]) -> Self {
        Range::new(v[0], v[1])
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.min, r.max]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Inclusive bounds on the number of roads.
    pub n_roads: [usize; 2],
    pub road_width: Range,
    /// Crosswalk extent along the road, `s2 - s1`.
    pub crosswalk_width: Range,
    /// Clearance between the intersection boundary and the nearest corner of
    /// the crosswalk.
    pub crosswalk_offset: Range,
    /// Maximum deviation of the boundary angle from perpendicular, degrees.
    pub angle_jitter: f64,
    pub p_no_crosswalk: f64,
    pub seed: u64,
    pub resolution: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_roads: [3, 6],
            road_width: Range::new(5.0, 9.0),
            crosswalk_width: Range::new(2.5, 5.0),
            crosswalk_offset: Range::new(0.5, 3.0),
            angle_jitter: 10.0,
            p_no_crosswalk: 0.1,
            seed: 0,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SceneError::InvalidConfig(m.to_string()));
        if self.n_roads[0] == 0 || self.n_roads[0] > self.n_roads[1] {
            return bad("n_roads must be a nonempty positive range");
        }
        if !self.road_width.is_valid_positive() {
            return bad("road_width must be a nonempty positive range");
        }
        if !self.crosswalk_width.is_valid_positive() {
            return bad("crosswalk_width must be a nonempty positive range");
        }
        if !self.crosswalk_offset.is_valid_positive() {
            return bad("crosswalk_offset must be a nonempty positive range");
        }
        if !(0.0..60.0).contains(&self.angle_jitter) {
            return bad("angle_jitter must lie in [0, 60) degrees");
        }
        if !(0.0..=1.0).contains(&self.p_no_crosswalk) {
            return bad("p_no_crosswalk must lie in [0, 1]");
        }
        if !(self.resolution > 0.0) {
            return bad("resolution must be positive");
        }
        Ok(())
    }
}

/// Road headings with every circular gap at least `sep`: uniform spacings
/// on the slack arc, shifted by a uniform rotation.
fn sample_headings<R: Rng>(rng: &mut R, n: usize, sep: f64) -> Option<Vec<f64>> {
    let slack = 2.0 * PI - n as f64 * sep;
    if slack < 0.0 {
        return None;
    }
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = e.iter().sum();
    let mut theta = rng.gen_range(0.0..2.0 * PI);
    let mut out = Vec::with_capacity(n);
    for ei in e {
        out.push(theta.rem_euclid(2.0 * PI));
        theta += sep + slack * ei / total;
    }
    Some(out)
}

/// Distance from the junction centre beyond which the corridors of two roads
/// separated by `delta` no longer overlap.
fn corridor_clearance(h_i: f64, h_j: f64, delta: f64) -> f64 {
    (h_i + h_j) / delta.min(PI / 2.0).sin()
}

struct Draft {
    heading: f64,
    width: f64,
}

fn try_generate<R: Rng>(cfg: &GeneratorConfig, rng: &mut R) -> std::result::Result<Scene, String> {
    let n = rng.gen_range(cfg.n_roads[0]..=cfg.n_roads[1]);
    let sep = MIN_ROAD_SEPARATION_DEG.to_radians();
    let headings =
        sample_headings(rng, n, sep).ok_or_else(|| format!("{n} roads cannot be {MIN_ROAD_SEPARATION_DEG} degrees apart"))?;
    let drafts: Vec<Draft> = headings
        .into_iter()
        .map(|heading| Draft {
            heading,
            width: cfg.road_width.sample(rng),
        })
        .collect();

    // Stub radius per road: far enough that neighbouring corridors clear.
    let stub_radius: Vec<f64> = (0..n)
        .map(|i| {
            let hi = drafts[i].width / 2.0;
            let mut r = hi + CORRIDOR_CLEARANCE;
            if n > 1 {
                for j in [(i + n - 1) % n, (i + 1) % n] {
                    let d = (drafts[i].heading - drafts[j].heading).rem_euclid(2.0 * PI);
                    let delta = d.min(2.0 * PI - d);
                    r = r.max(corridor_clearance(hi, drafts[j].width / 2.0, delta) + CORRIDOR_CLEARANCE);
                }
            }
            r
        })
        .collect();

    let center = Point2::new(0.0, 0.0);
    let mut hull_pts = vec![center];
    for (d, &r) in drafts.iter().zip(&stub_radius) {
        let dir = Point2::from_angle(d.heading);
        let normal = dir.perp();
        let stub = center + dir * r;
        hull_pts.push(stub + normal * (d.width / 2.0));
        hull_pts.push(stub - normal * (d.width / 2.0));
    }
    let intersection = Polygon::new(convex_hull(&hull_pts)).map_err(|e| e.to_string())?;

    let jitter_max = cfg.angle_jitter.to_radians();
    let mut roads = Vec::with_capacity(n);
    let mut crosswalks = Vec::new();
    let mut cover: Vec<Point2> = intersection.vertices().to_vec();
    for (i, (d, &r)) in drafts.iter().zip(&stub_radius).enumerate() {
        let dir = Point2::from_angle(d.heading);
        let centerline =
            Polyline::new(vec![center, center + dir * (r + CENTERLINE_REACH)]).map_err(|e| e.to_string())?;
        let road = RoadCenterline {
            id: format!("r{i}"),
            centerline,
            width: d.width,
        };
        let hw = road.half_width();
        let exit = road
            .exit_arclength(&intersection)
            .ok_or_else(|| format!("road {i} never leaves the intersection"))?;

        // Approach region the grid must cover even when no crosswalk is drawn.
        let reach = cfg.crosswalk_offset.max + cfg.crosswalk_width.max + hw * jitter_max.tan();
        let normal = dir.perp();
        for s in [exit, exit + reach] {
            let c = road.centerline.point_at(s);
            cover.push(c + normal * hw);
            cover.push(c - normal * hw);
        }

        let draw = rng.gen_bool(1.0 - cfg.p_no_crosswalk);
        // Always consume the same number of draws per road so that the
        // presence decision does not shift later roads' randomness.
        let jitter = if jitter_max > 0.0 {
            rng.gen_range(-jitter_max..=jitter_max)
        } else {
            0.0
        };
        let width = cfg.crosswalk_width.sample(rng);
        let offset = cfg.crosswalk_offset.sample(rng);
        if draw {
            let beta = fold_angle(d.heading + PI / 2.0 + jitter);
            let s1 = exit + offset + hw * jitter.tan().abs();
            let s2 = s1 + width;
            let polygon = crosswalk_polygon(&road.centerline, s1, s2, beta, hw).map_err(|e| e.to_string())?;
            cover.extend_from_slice(polygon.vertices());
            crosswalks.push(CrosswalkGT {
                road_id: road.id.clone(),
                s1,
                s2,
                beta,
                polygon,
            });
        }
        roads.push(road);
    }

    for (i, a) in crosswalks.iter().enumerate() {
        if a.polygon.intersects(&intersection) {
            return Err(format!("crosswalk on {} overlaps the intersection", a.road_id));
        }
        for b in &crosswalks[i + 1..] {
            if a.polygon.intersects(&b.polygon) {
                return Err(format!("crosswalks on {} and {} overlap", a.road_id, b.road_id));
            }
        }
    }

    let res = cfg.resolution;
    let (mut min, mut max) = (cover[0], cover[0]);
    for p in &cover {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    let origin = Point2::new(
        ((min.x - GRID_MARGIN) / res).floor() * res,
        ((min.y - GRID_MARGIN) / res).floor() * res,
    );
    let width_px = ((max.x + GRID_MARGIN - origin.x) / res).ceil() as usize + 1;
    let height_px = ((max.y + GRID_MARGIN - origin.y) / res).ceil() as usize + 1;
    let grid = GridSpec::new(origin, res, width_px, height_px).map_err(|e| e.to_string())?;

    let scene = Scene {
        grid,
        intersection,
        roads,
        crosswalks,
    };
    scene.validate().map_err(|(f, m)| format!("{f}: {m}"))?;
    Ok(scene)
}

/// Deterministic scene `index` of the stream seeded by `cfg.seed`.
///
/// Each index draws from its own hashed random stream, so scenes can be
/// produced in any order or in parallel with identical results.
pub fn generate_scene(cfg: &GeneratorConfig, index: u64) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, index, rng::DOMAIN_SCENE);
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        match try_generate(cfg, &mut rng) {
            Ok(scene) => return Ok(scene),
            Err(reason) => last = reason,
        }
    }
    Err(SceneError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::folded_difference;
    use crate::scene::scene_to_string;

    #[test]
    fn deterministic_per_index() {
        let cfg = GeneratorConfig {
            seed: 11,
            ..Default::default()
        };
        let a = scene_to_string(&generate_scene(&cfg, 5).unwrap());
        let b = scene_to_string(&generate_scene(&cfg, 5).unwrap());
        assert_eq!(a, b);
        let c = scene_to_string(&generate_scene(&cfg, 6).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn order_independent() {
        let cfg = GeneratorConfig::default();
        let forward: Vec<String> = (0..5).map(|i| scene_to_string(&generate_scene(&cfg, i).unwrap())).collect();
        let backward: Vec<String> = (0..5)
            .rev()
            .map(|i| scene_to_string(&generate_scene(&cfg, i).unwrap()))
            .collect();
        let backward: Vec<String> = backward.into_iter().rev().collect();
        assert_eq!(forward, backward);
    }

    #[test]
    fn fixed_road_count() {
        let cfg = GeneratorConfig {
            n_roads: [4, 4],
            ..Default::default()
        };
        for i in 0..10 {
            assert_eq!(generate_scene(&cfg, i).unwrap().roads.len(), 4);
        }
    }

    #[test]
    fn every_road_gets_a_crosswalk_when_p_is_zero() {
        let cfg = GeneratorConfig {
            p_no_crosswalk: 0.0,
            ..Default::default()
        };
        for i in 0..100 {
            let s = generate_scene(&cfg, i).unwrap();
            assert_eq!(s.crosswalks.len(), s.roads.len());
        }
    }

    #[test]
    fn generated_invariants_hold() {
        let cfg = GeneratorConfig {
            n_roads: [3, 8],
            p_no_crosswalk: 0.2,
            seed: 3,
            ..Default::default()
        };
        for i in 0..40 {
            let s = generate_scene(&cfg, i).unwrap();
            for (k, a) in s.crosswalks.iter().enumerate() {
                assert!(!a.polygon.intersects(&s.intersection));
                for b in &s.crosswalks[k + 1..] {
                    assert!(!a.polygon.intersects(&b.polygon));
                }
                let road = s.road(&a.road_id).unwrap();
                let perp = road.centerline.mean_direction().angle() + PI / 2.0;
                let dev = folded_difference(a.beta, perp).abs().to_degrees();
                assert!(dev <= cfg.angle_jitter + 1e-9, "deviation {dev}");
                for v in a.polygon.vertices() {
                    assert!(s.grid.contains(*v));
                }
            }
            for v in s.intersection.vertices() {
                assert!(s.grid.contains(*v));
            }
            // Neighbouring roads at least 25 degrees apart.
            let mut hs: Vec<f64> = s
                .roads
                .iter()
                .map(|r| r.centerline.mean_direction().angle().rem_euclid(2.0 * PI))
                .collect();
            hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for k in 0..hs.len() {
                let next = if k + 1 < hs.len() { hs[k + 1] } else { hs[0] + 2.0 * PI };
                assert!((next - hs[k]).to_degrees() >= 25.0 - 1e-9);
            }
        }
    }

    #[test]
    fn impossible_separation_fails() {
        let cfg = GeneratorConfig {
            n_roads: [15, 15],
            ..Default::default()
        };
        assert!(matches!(
            generate_scene(&cfg, 0),
            Err(SceneError::GenerationFailed { attempts: 100, .. })
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = GeneratorConfig {
            p_no_crosswalk: 1.5,
            ..Default::default()
        };
        assert!(matches!(generate_scene(&cfg, 0), Err(SceneError::InvalidConfig(_))));
    }
}
