//! 16-bit binary PGM export for depth maps.

use std::path::Path;

use super::write_file;
use crate::error::{Error, Result};
use crate::model::DepthMap;

/// Gray level for a depth: `round_half_up(clamp(d / max_depth, 0, 1) * 65535)`,
/// 0 for invalid pixels.
pub fn quantize(depth: f64, max_depth: f64) -> u16 {
    if !DepthMap::is_valid_depth(depth) {
        return 0;
    }
    let scaled = (depth / max_depth).clamp(0.0, 1.0) * f64::from(u16::MAX);
    (scaled + 0.5).floor() as u16
}

/// Encodes a `P5` image with maxval 65535 (samples big-endian, as PGM requires).
pub fn encode_pgm(dm: &DepthMap, max_depth: f64) -> Result<Vec<u8>> {
    if !(max_depth.is_finite() && max_depth > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "max depth must be finite and > 0, got {max_depth}"
        )));
    }
    let header = format!("P5\n{} {}\n65535\n", dm.width(), dm.height());
    let mut out = Vec::with_capacity(header.len() + 2 * dm.data().len());
    out.extend_from_slice(header.as_bytes());
    for &d in dm.data() {
        out.extend_from_slice(&quantize(d, max_depth).to_be_bytes());
    }
    Ok(out)
}

pub fn export_pgm(dm: &DepthMap, path: impl AsRef<Path>, max_depth: f64) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(dm, max_depth)?)
}
