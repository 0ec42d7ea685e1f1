//! The three bird's-eye-view feature maps consumed by inference, an oracle
//! renderer that produces them from ground truth, corruption models, and
//! file I/O.

mod corrupt;
mod gridfile;
mod pgm;
mod render;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::geometry::Grid;
use crate::geometry::{fold_angle, GridSpec};
pub use corrupt::{corrupt, CorruptionConfig};
pub use gridfile::{
    decode_channels, encode_channels, read_channels, read_grids, write_channels, write_grids, GRID_MAGIC,
};
pub use pgm::{export_pgm, gray_level};
pub use render::render_oracle;

/// Peak of the inverse distance transform, pixels.
pub const DT_THRESHOLD_PX: f32 = 30.0;
/// Diameter of the band around each boundary on which angles are defined,
/// pixels.
pub const ANGLE_DILATION_PX: f64 = 30.0;

#[derive(Debug, Error)]
pub enum FeatureMapError {
    #[error("not a grid file (bad magic)")]
    BadMagic,
    #[error("grid file is truncated")]
    TruncatedFile,
    #[error("grid file checksum mismatch (stored {stored:016x}, computed {computed:016x})")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("malformed grid file: {0}")]
    Malformed(String),
    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid corruption config: {0}")]
    InvalidConfig(String),
    #[error("scale must be positive, got {0}")]
    InvalidScale(f64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, FeatureMapError>;

/// Segmentation probability, inverse distance transform (pixels, `0..=30`),
/// boundary-angle unit vector and the mask where that vector is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMaps {
    pub seg: Grid,
    pub dt: Grid,
    pub angle_x: Grid,
    pub angle_y: Grid,
    pub angle_mask: Grid,
}

/// Channel names in file order.
pub const CHANNEL_NAMES: [&str; 5] = ["seg", "dt", "angle_x", "angle_y", "angle_mask"];

/// A channel group that can be swapped for its oracle version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "seg")]
    Seg,
    #[serde(rename = "dt")]
    Dt,
    /// `angle_x`, `angle_y` and `angle_mask` together.
    #[serde(rename = "ang")]
    Angle,
}

impl FeatureMaps {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            seg: Grid::zeros(spec),
            dt: Grid::zeros(spec),
            angle_x: Grid::zeros(spec),
            angle_y: Grid::zeros(spec),
            angle_mask: Grid::zeros(spec),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.seg.spec
    }

    pub fn channels(&self) -> [&Grid; 5] {
        [&self.seg, &self.dt, &self.angle_x, &self.angle_y, &self.angle_mask]
    }

    fn channels_mut(&mut self) -> [&mut Grid; 5] {
        [
            &mut self.seg,
            &mut self.dt,
            &mut self.angle_x,
            &mut self.angle_y,
            &mut self.angle_mask,
        ]
    }

    /// Reassembles maps from five planar channels in file order.
    pub fn from_channels(spec: GridSpec, channels: Vec<Vec<f32>>) -> Result<Self> {
        if channels.len() != 5 {
            return Err(FeatureMapError::ShapeMismatch(format!(
                "expected 5 channels, found {}",
                channels.len()
            )));
        }
        let mut it = channels.into_iter();
        let mut next = || {
            Grid::from_values(spec, it.next().unwrap()).map_err(|e| FeatureMapError::ShapeMismatch(e.to_string()))
        };
        Ok(Self {
            seg: next()?,
            dt: next()?,
            angle_x: next()?,
            angle_y: next()?,
            angle_mask: next()?,
        })
    }

    /// Folded angle at a flat pixel index, or `None` off the mask.
    pub fn angle_at(&self, idx: usize) -> Option<f64> {
        if self.angle_mask.values[idx] == 0.0 {
            return None;
        }
        let x = self.angle_x.values[idx] as f64;
        let y = self.angle_y.values[idx] as f64;
        Some(fold_angle(y.atan2(x)))
    }

    /// Overwrites the selected channel group with the one from `other`.
    pub fn inject(&mut self, other: &FeatureMaps, channel: Channel) {
        match channel {
            Channel::Seg => self.seg = other.seg.clone(),
            Channel::Dt => self.dt = other.dt.clone(),
            Channel::Angle => {
                self.angle_x = other.angle_x.clone();
                self.angle_y = other.angle_y.clone();
                self.angle_mask = other.angle_mask.clone();
            }
        }
    }
}
