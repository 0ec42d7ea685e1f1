use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::geometry::{crosswalk_boundaries, fill_polygon, Grid, GridSpec, Point2, Polygon, Segment};
use crate::inference::CrosswalkPrediction;
use crate::scene::CrosswalkGT;

/// Distance thresholds for precision and recall, meters.
pub const TAUS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
/// Point spacing used to discretize boundaries, meters.
pub const BOUNDARY_SAMPLE_STEP: f64 = 0.04;

/// Discrete symmetric Hausdorff distance between two point sets.
fn hausdorff(a: &[Point2], b: &[Point2]) -> f64 {
    let directed = |x: &[Point2], y: &[Point2]| {
        x.iter()
            .map(|p| y.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn boundaries_of(poly: &Polygon) -> Result<[Segment; 2]> {
    crosswalk_boundaries(poly).ok_or_else(|| EvalError::Invalid("polygon is not a crosswalk quadrilateral".into()))
}

/// Larger of the two boundary distances (through `s1` and through `s2`),
/// each the symmetric Hausdorff distance between boundary segments sampled
/// every 4 cm.
pub fn crosswalk_distance(pred: &CrosswalkPrediction, gt: &CrosswalkGT) -> Result<f64> {
    if pred.road_id != gt.road_id {
        return Err(EvalError::RoadMismatch {
            pred: pred.road_id.clone(),
            gt: gt.road_id.clone(),
        });
    }
    let poly = pred
        .polygon
        .as_ref()
        .ok_or_else(|| EvalError::Invalid(format!("prediction on {} has no polygon", pred.road_id)))?;
    polygon_distance(poly, &gt.polygon)
}

/// [`crosswalk_distance`] on bare crosswalk polygons.
pub fn polygon_distance(a: &Polygon, b: &Polygon) -> Result<f64> {
    let pa = boundaries_of(a)?;
    let pb = boundaries_of(b)?;
    let mut d: f64 = 0.0;
    for (x, y) in pa.iter().zip(&pb) {
        d = d.max(hausdorff(&x.sample(BOUNDARY_SAMPLE_STEP), &y.sample(BOUNDARY_SAMPLE_STEP)));
    }
    Ok(d)
}

/// Matching counts pooled over scenes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCounts {
    pub matched_preds: [usize; 4],
    pub n_preds: usize,
    pub matched_gts: [usize; 4],
    pub n_gts: usize,
}

impl PrCounts {
    /// Counts for one scene. Only present predictions take part; a
    /// prediction can only match the ground truth on its own road.
    pub fn from_scene(preds: &[CrosswalkPrediction], gts: &[CrosswalkGT]) -> Result<Self> {
        let present: Vec<&CrosswalkPrediction> = preds.iter().filter(|p| p.present).collect();
        let mut c = PrCounts {
            n_preds: present.len(),
            n_gts: gts.len(),
            ..Default::default()
        };
        let mut pred_best = vec![f64::INFINITY; present.len()];
        let mut gt_best = vec![f64::INFINITY; gts.len()];
        for (i, p) in present.iter().enumerate() {
            for (j, g) in gts.iter().enumerate() {
                if p.road_id != g.road_id {
                    continue;
                }
                let d = crosswalk_distance(p, g)?;
                pred_best[i] = pred_best[i].min(d);
                gt_best[j] = gt_best[j].min(d);
            }
        }
        for (k, tau) in TAUS.iter().enumerate() {
            c.matched_preds[k] = pred_best.iter().filter(|d| **d < *tau).count();
            c.matched_gts[k] = gt_best.iter().filter(|d| **d < *tau).count();
        }
        Ok(c)
    }

    pub fn add(&mut self, o: &PrCounts) {
        for k in 0..4 {
            self.matched_preds[k] += o.matched_preds[k];
            self.matched_gts[k] += o.matched_gts[k];
        }
        self.n_preds += o.n_preds;
        self.n_gts += o.n_gts;
    }

    /// Precision and recall per threshold. An empty denominator yields 1.0
    /// and sets the matching flag.
    pub fn rates(&self) -> PrecisionRecall {
        let frac = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        PrecisionRecall {
            precision_at: self.matched_preds.map(|m| frac(m, self.n_preds)),
            recall_at: self.matched_gts.map(|m| frac(m, self.n_gts)),
            precision_undefined: self.n_preds == 0,
            recall_undefined: self.n_gts == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    /// Indexed like [`TAUS`].
    pub precision_at: [f64; 4],
    pub recall_at: [f64; 4],
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

/// Precision and recall at [`TAUS`] for one set of predictions.
pub fn precision_recall(preds: &[CrosswalkPrediction], gts: &[CrosswalkGT]) -> Result<PrecisionRecall> {
    Ok(PrCounts::from_scene(preds, gts)?.rates())
}

/// IoU of the rasterized unions of present predicted polygons and ground
/// truth polygons on `grid`; 1.0 when both are empty. Only the window
/// covering the polygons is rasterized.
pub fn scene_iou(preds: &[CrosswalkPrediction], gts: &[CrosswalkGT], grid: &GridSpec) -> f64 {
    let pred_polys: Vec<&Polygon> = preds
        .iter()
        .filter(|p| p.present)
        .filter_map(|p| p.polygon.as_ref())
        .collect();
    let gt_polys: Vec<&Polygon> = gts.iter().map(|g| &g.polygon).collect();
    polygon_set_iou(&pred_polys, &gt_polys, grid)
}

pub fn polygon_set_iou(a: &[&Polygon], b: &[&Polygon], grid: &GridSpec) -> f64 {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in a.iter().chain(b) {
        let (l, h) = p.bbox();
        lo = Point2::new(lo.x.min(l.x), lo.y.min(l.y));
        hi = Point2::new(hi.x.max(h.x), hi.y.max(h.y));
    }
    let Some(((r0, r1), (c0, c1))) = grid.index_window(lo, hi) else {
        return 1.0;
    };
    let window = GridSpec::new(grid.pixel_to_world(r0, c0), grid.resolution, c1 - c0 + 1, r1 - r0 + 1)
        .expect("window of a valid grid");
    let mut ma = Grid::zeros(window);
    let mut mb = Grid::zeros(window);
    for p in a {
        fill_polygon(&mut ma, p, 1.0);
    }
    for p in b {
        fill_polygon(&mut mb, p, 1.0);
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (x, y) in ma.values.iter().zip(&mb.values) {
        let (x, y) = (*x != 0.0, *y != 0.0);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
