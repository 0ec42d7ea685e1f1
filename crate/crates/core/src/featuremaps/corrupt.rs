use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FeatureMapError, FeatureMaps, Grid, Result, DT_THRESHOLD_PX};
use crate::geometry::fold_angle;
use crate::rng::{self, DOMAIN_CORRUPT};
use crate::scene::Range;

/// Degradations applied to clean maps to imitate imperfect predictions.
/// All-zero means no change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionConfig {
    /// Gaussian blur of `seg` and `dt`, pixels.
    pub blur_sigma: f64,
    /// Additive Gaussian noise as a fraction of each channel's range
    /// (`[0, 1]` for seg, `[0, 30]` for dt).
    pub noise_sigma: f64,
    /// Fraction of the raster covered by holes.
    pub hole_rate: f64,
    /// Hole side lengths, pixels.
    pub hole_size: Range,
    /// Disk radius of the min filter applied to `seg`, pixels.
    pub erosion: f64,
    /// Half-width of the uniform per-pixel angle perturbation, degrees.
    pub angle_jitter: f64,
    pub seed: u64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            blur_sigma: 0.0,
            noise_sigma: 0.0,
            hole_rate: 0.0,
            hole_size: Range::new(20.0, 60.0),
            erosion: 0.0,
            angle_jitter: 0.0,
            seed: 0,
        }
    }
}

impl CorruptionConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("blur_sigma", self.blur_sigma),
            ("noise_sigma", self.noise_sigma),
            ("hole_rate", self.hole_rate),
            ("hole_size", self.hole_size.min),
            ("erosion", self.erosion),
            ("angle_jitter", self.angle_jitter),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(FeatureMapError::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.hole_rate > 1.0 {
            return Err(FeatureMapError::InvalidConfig(format!(
                "hole_rate must be <= 1, got {}",
                self.hole_rate
            )));
        }
        if !(self.hole_size.max >= self.hole_size.min && self.hole_size.max.is_finite()) {
            return Err(FeatureMapError::InvalidConfig("hole_size must be a range [min, max]".into()));
        }
        if self.hole_rate > 0.0 && self.hole_size.max < 1.0 {
            return Err(FeatureMapError::InvalidConfig("hole_size must reach at least 1 pixel".into()));
        }
        Ok(())
    }
}

const STAGE_NOISE: u64 = 1;
const STAGE_HOLES: u64 = 2;
const STAGE_JITTER: u64 = 3;

/// Applies, in order: erosion of `seg`, Gaussian blur of `seg` and `dt`,
/// clamped additive noise, rectangular holes zeroing every channel, and
/// per-pixel jitter of the folded angle. Each stage is skipped when its
/// parameter is zero. Deterministic in `(maps, cfg)`.
pub fn corrupt(maps: &FeatureMaps, cfg: &CorruptionConfig) -> Result<FeatureMaps> {
    cfg.validate()?;
    let mut out = maps.clone();
    if cfg.erosion > 0.0 {
        out.seg = erode(&out.seg, cfg.erosion);
    }
    if cfg.blur_sigma > 0.0 {
        out.seg = gaussian_blur(&out.seg, cfg.blur_sigma);
        out.dt = gaussian_blur(&out.dt, cfg.blur_sigma);
    }
    if cfg.noise_sigma > 0.0 {
        let mut rng = rng::stream(cfg.seed, STAGE_NOISE, DOMAIN_CORRUPT);
        add_noise(&mut out.seg, cfg.noise_sigma, 1.0, &mut rng);
        add_noise(&mut out.dt, cfg.noise_sigma, DT_THRESHOLD_PX, &mut rng);
    }
    if cfg.hole_rate > 0.0 {
        let mut rng = rng::stream(cfg.seed, STAGE_HOLES, DOMAIN_CORRUPT);
        let covered = hole_mask(&out.seg, cfg.hole_rate, cfg.hole_size, &mut rng);
        for ch in out.channels_mut() {
            for (v, c) in ch.values.iter_mut().zip(&covered) {
                if *c {
                    *v = 0.0;
                }
            }
        }
    }
    if cfg.angle_jitter > 0.0 {
        let mut rng = rng::stream(cfg.seed, STAGE_JITTER, DOMAIN_CORRUPT);
        let j = cfg.angle_jitter.to_radians();
        for i in 0..out.angle_mask.values.len() {
            if let Some(a) = out.angle_at(i) {
                let a = fold_angle(a + rng.gen_range(-j..=j));
                out.angle_x.values[i] = a.cos() as f32;
                out.angle_y.values[i] = a.sin() as f32;
            }
        }
    }
    Ok(out)
}

/// Minimum over a disk of radius `r` pixels; neighbours outside the raster
/// are ignored.
fn erode(g: &Grid, r: f64) -> Grid {
    let ri = r.floor() as i64;
    let offsets: Vec<(i64, i64)> = (-ri..=ri)
        .flat_map(|dy| (-ri..=ri).map(move |dx| (dy, dx)))
        .filter(|&(dy, dx)| ((dx * dx + dy * dy) as f64) <= r * r)
        .collect();
    let (w, h) = (g.width() as i64, g.height() as i64);
    let mut out = g.clone();
    for row in 0..h {
        for col in 0..w {
            let idx = (row * w + col) as usize;
            if g.values[idx] == 0.0 {
                continue;
            }
            let mut m = g.values[idx];
            for &(dy, dx) in &offsets {
                let (y, x) = (row + dy, col + dx);
                if y >= 0 && y < h && x >= 0 && x < w {
                    m = m.min(g.values[(y * w + x) as usize]);
                }
            }
            out.values[idx] = m;
        }
    }
    out
}

/// Normalized Gaussian taps for offsets `-r..=r`, `r = ceil(3σ)`.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    (-r..=r)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Separable Gaussian blur truncated at 3σ. Near the border the kernel is
/// renormalized over the taps that fall inside the raster.
fn gaussian_blur(g: &Grid, sigma: f64) -> Grid {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (g.width(), g.height());

    // Horizontal pass; all-zero rows stay zero.
    let mut tmp = vec![0.0f64; w * h];
    let mut nonzero = vec![false; h];
    for row in 0..h {
        let src = g.row(row);
        if src.iter().all(|v| *v == 0.0) {
            continue;
        }
        nonzero[row] = true;
        let dst = &mut tmp[row * w..(row + 1) * w];
        for (col, d) in dst.iter_mut().enumerate() {
            let lo = (col as i64 - r).max(0) as usize;
            let hi = (col as i64 + r).min(w as i64 - 1) as usize;
            let (mut acc, mut norm) = (0.0, 0.0);
            for x in lo..=hi {
                let wt = k[(x as i64 - col as i64 + r) as usize];
                acc += wt * src[x] as f64;
                norm += wt;
            }
            *d = acc / norm;
        }
    }

    // Vertical pass, accumulated row by row.
    let mut out = Grid::zeros(g.spec);
    let mut acc = vec![0.0f64; w];
    for row in 0..h {
        let lo = (row as i64 - r).max(0) as usize;
        let hi = (row as i64 + r).min(h as i64 - 1) as usize;
        if !(lo..=hi).any(|y| nonzero[y]) {
            continue;
        }
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut norm = 0.0;
        for y in lo..=hi {
            let wt = k[(y as i64 - row as i64 + r) as usize];
            norm += wt;
            if nonzero[y] {
                for (a, v) in acc.iter_mut().zip(&tmp[y * w..(y + 1) * w]) {
                    *a += wt * v;
                }
            }
        }
        for (o, a) in out.values[row * w..(row + 1) * w].iter_mut().zip(&acc) {
            *o = (a / norm) as f32;
        }
    }
    out
}

fn add_noise<R: Rng>(g: &mut Grid, sigma: f64, range: f32, rng: &mut R) {
    let normal = Normal::new(0.0, sigma * range as f64).expect("sigma checked non-negative");
    for v in &mut g.values {
        *v = (*v as f64 + normal.sample(rng)).clamp(0.0, range as f64) as f32;
    }
}

/// Covers the raster with randomly placed axis-aligned rectangles until at
/// least `rate` of the pixels are covered.
fn hole_mask<R: Rng>(g: &Grid, rate: f64, size: Range, rng: &mut R) -> Vec<bool> {
    let (w, h) = (g.width(), g.height());
    let n = w * h;
    if rate >= 1.0 {
        return vec![true; n];
    }
    let target = (rate * n as f64).ceil() as usize;
    let mut covered = vec![false; n];
    let mut count = 0;
    let lo = size.min.round().max(1.0) as i64;
    let hi = size.max.round().max(lo as f64) as i64;
    while count < target {
        let hw = rng.gen_range(lo..=hi);
        let hh = rng.gen_range(lo..=hi);
        let cx = rng.gen_range(0..w as i64);
        let cy = rng.gen_range(0..h as i64);
        let (x0, y0) = ((cx - hw / 2).max(0), (cy - hh / 2).max(0));
        let (x1, y1) = ((cx - hw / 2 + hw).min(w as i64), (cy - hh / 2 + hh).min(h as i64));
        for y in y0..y1 {
            for x in x0..x1 {
                let i = y as usize * w + x as usize;
                if !covered[i] {
                    covered[i] = true;
                    count += 1;
                }
            }
        }
    }
    covered
}
