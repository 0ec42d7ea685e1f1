use std::fs;
use std::path::Path;

use crc::{Crc, CRC_64_ECMA_182};

use super::{FeatureMapError, FeatureMaps, Result};
use crate::geometry::GridSpec;

pub const GRID_MAGIC: &[u8; 8] = b"CWGRID1\n";

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_ECMA_182);

/// Serializes equally sized planar channels: magic, `"<w> <h> <c>\n"`,
/// little-endian binary32 payload, then the payload's CRC-64 (little-endian).
pub fn encode_channels(width: usize, height: usize, channels: &[&[f32]]) -> Result<Vec<u8>> {
    let n = width * height;
    if let Some(bad) = channels.iter().find(|c| c.len() != n) {
        return Err(FeatureMapError::ShapeMismatch(format!(
            "channel of {} values for a {width}x{height} raster",
            bad.len()
        )));
    }
    let header = format!("{width} {height} {}\n", channels.len());
    let mut buf = Vec::with_capacity(GRID_MAGIC.len() + header.len() + 4 * n * channels.len() + 8);
    buf.extend_from_slice(GRID_MAGIC);
    buf.extend_from_slice(header.as_bytes());
    let start = buf.len();
    for c in channels {
        for v in *c {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = CRC64.checksum(&buf[start..]);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

/// Inverse of [`encode_channels`]: `(width, height, channels)`.
pub fn decode_channels(bytes: &[u8]) -> Result<(usize, usize, Vec<Vec<f32>>)> {
    if bytes.len() < GRID_MAGIC.len() {
        return Err(if GRID_MAGIC.starts_with(bytes) {
            FeatureMapError::TruncatedFile
        } else {
            FeatureMapError::BadMagic
        });
    }
    if &bytes[..GRID_MAGIC.len()] != GRID_MAGIC {
        return Err(FeatureMapError::BadMagic);
    }
    let rest = &bytes[GRID_MAGIC.len()..];
    let nl = rest
        .iter()
        .take(64)
        .position(|b| *b == b'\n')
        .ok_or(if rest.len() < 64 {
            FeatureMapError::TruncatedFile
        } else {
            FeatureMapError::Malformed("header line too long".into())
        })?;
    let header = std::str::from_utf8(&rest[..nl]).map_err(|_| FeatureMapError::Malformed("header".into()))?;
    let fields: Vec<usize> = header
        .split(' ')
        .map(|f| f.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| FeatureMapError::Malformed(format!("header {header:?}")))?;
    let [w, h, c] = fields[..] else {
        return Err(FeatureMapError::Malformed(format!("header {header:?}")));
    };
    let payload_len = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(c))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| FeatureMapError::Malformed("dimensions overflow".into()))?;
    let body = &rest[nl + 1..];
    if body.len() < payload_len + 8 {
        return Err(FeatureMapError::TruncatedFile);
    }
    if body.len() > payload_len + 8 {
        return Err(FeatureMapError::Malformed(format!(
            "{} trailing bytes",
            body.len() - payload_len - 8
        )));
    }
    let (payload, tail) = body.split_at(payload_len);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let computed = CRC64.checksum(payload);
    if stored != computed {
        return Err(FeatureMapError::ChecksumMismatch { stored, computed });
    }
    let n = w * h;
    let channels = (0..c)
        .map(|k| {
            payload[k * 4 * n..(k + 1) * 4 * n]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok((w, h, channels))
}

pub fn write_channels(path: impl AsRef<Path>, width: usize, height: usize, channels: &[&[f32]]) -> Result<()> {
    fs::write(path, encode_channels(width, height, channels)?)?;
    Ok(())
}

pub fn read_channels(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<Vec<f32>>)> {
    decode_channels(&fs::read(path)?)
}

/// Writes the five channels in the order seg, dt, angle_x, angle_y,
/// angle_mask.
pub fn write_grids(path: impl AsRef<Path>, maps: &FeatureMaps) -> Result<()> {
    let g = maps.spec();
    let chans: Vec<&[f32]> = maps.channels().iter().map(|c| c.values.as_slice()).collect();
    write_channels(path, g.width_px, g.height_px, &chans)
}

/// Reads maps written by [`write_grids`]. The file stores only the raster
/// shape, so the world placement comes from `spec`, whose shape must match.
pub fn read_grids(path: impl AsRef<Path>, spec: &GridSpec) -> Result<FeatureMaps> {
    let (w, h, channels) = read_channels(path)?;
    if (w, h) != (spec.width_px, spec.height_px) {
        return Err(FeatureMapError::ShapeMismatch(format!(
            "file is {w}x{h}, scene grid is {}x{}",
            spec.width_px, spec.height_px
        )));
    }
    FeatureMaps::from_channels(*spec, channels)
}
