//! Multi-task training losses over feature-map grids: binary cross-entropy
//! on segmentation, mean squared error on the inverse distance transform,
//! and a folded squared angular error on boundary directions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::featuremaps::{FeatureMaps, Grid};
use crate::geometry::{fold_angle, folded_difference};

/// Probability clamp keeping the cross-entropy finite on hard 0/1 inputs.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("grid shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("angle mask selects no pixels")]
    EmptyMask,
    #[error("invalid loss config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, LossError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_align: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { lambda_align: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub seg: f64,
    pub dt: f64,
    pub align: f64,
    pub total: f64,
}

fn check_shapes(grids: &[&Grid]) -> Result<()> {
    let first = grids[0];
    for g in &grids[1..] {
        if !first.same_shape(g) {
            return Err(LossError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                first.width(),
                first.height(),
                g.width(),
                g.height()
            )));
        }
    }
    Ok(())
}

/// Mean binary cross-entropy of probabilities `pred` against labels `gt`.
pub fn seg_loss(pred: &Grid, gt: &Grid) -> Result<f64> {
    check_shapes(&[pred, gt])?;
    let n = pred.values.len();
    let sum: f64 = pred
        .values
        .iter()
        .zip(&gt.values)
        .map(|(&y, &t)| {
            let y = (y as f64).clamp(BCE_EPS, 1.0 - BCE_EPS);
            let t = t as f64;
            -(t * y.ln() + (1.0 - t) * (1.0 - y).ln())
        })
        .sum();
    Ok(sum / n as f64)
}

/// Mean squared difference.
pub fn dt_loss(pred: &Grid, gt: &Grid) -> Result<f64> {
    check_shapes(&[pred, gt])?;
    let n = pred.values.len();
    let sum: f64 = pred
        .values
        .iter()
        .zip(&gt.values)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

/// Mean over `mask` of the squared folded difference between the direction
/// of `(pred_vx, pred_vy)` and `gt_angle` (radians). The difference is
/// wrapped into `(-π/2, π/2]`, so θ and θ + π count as the same boundary.
pub fn alignment_loss(pred_vx: &Grid, pred_vy: &Grid, gt_angle: &Grid, mask: &Grid) -> Result<f64> {
    check_shapes(&[pred_vx, pred_vy, gt_angle, mask])?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..mask.values.len() {
        if mask.values[i] == 0.0 {
            continue;
        }
        let pred = fold_angle((pred_vy.values[i] as f64).atan2(pred_vx.values[i] as f64));
        let d = folded_difference(pred, fold_angle(gt_angle.values[i] as f64));
        sum += d * d;
        n += 1;
    }
    if n == 0 {
        return Err(LossError::EmptyMask);
    }
    Ok(sum / n as f64)
}

/// `seg + dt + lambda_align·align`, with the angle term evaluated on the
/// ground-truth angle mask. A ground truth without any boundary has no
/// defined angle and contributes `align = 0`.
pub fn total_loss(pred: &FeatureMaps, gt: &FeatureMaps, cfg: &LossConfig) -> Result<LossReport> {
    if !(cfg.lambda_align >= 0.0 && cfg.lambda_align.is_finite()) {
        return Err(LossError::InvalidConfig(format!("lambda_align {}", cfg.lambda_align)));
    }
    let pc = pred.channels();
    let gc = gt.channels();
    for (p, g) in pc.iter().zip(gc.iter()) {
        check_shapes(&[p, g])?;
    }
    let seg = seg_loss(&pred.seg, &gt.seg)?;
    let dt = dt_loss(&pred.dt, &gt.dt)?;
    let mut gt_angle = Grid::zeros(gt.angle_x.spec);
    for (i, a) in gt_angle.values.iter_mut().enumerate() {
        *a = gt.angle_at(i).unwrap_or(0.0) as f32;
    }
    let align = match alignment_loss(&pred.angle_x, &pred.angle_y, &gt_angle, &gt.angle_mask) {
        Ok(v) => v,
        Err(LossError::EmptyMask) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(LossReport {
        seg,
        dt,
        align,
        total: seg + dt + cfg.lambda_align * align,
    })
}
