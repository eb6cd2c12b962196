//! Depth file (`DPM1`): magic, `height: u32`, `width: u32`, then row-major
//! little-endian f32 meters. Invalid pixels are stored as NaN.

use std::path::Path;

use super::{read_file, write_file, Reader};
use crate::error::{Error, Result};
use crate::model::DepthMap;

pub const DEPTH_MAGIC: [u8; 4] = *b"DPM1";

pub fn encode_depth_map(dm: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * dm.data().len());
    out.extend_from_slice(&DEPTH_MAGIC);
    out.extend_from_slice(&(dm.height() as u32).to_le_bytes());
    out.extend_from_slice(&(dm.width() as u32).to_le_bytes());
    for &v in dm.data() {
        let stored = if DepthMap::is_valid_depth(v) {
            v as f32
        } else {
            f32::NAN
        };
        out.extend_from_slice(&stored.to_le_bytes());
    }
    out
}

pub fn decode_depth_map(bytes: &[u8]) -> Result<DepthMap> {
    let mut r = Reader::new(bytes);
    let magic = r.array::<4>()?;
    if magic != DEPTH_MAGIC {
        return Err(Error::BadMagic {
            expected: DEPTH_MAGIC,
            found: magic,
        });
    }
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let count = height.checked_mul(width).ok_or(Error::TruncatedPayload {
        needed: usize::MAX,
        available: r.remaining(),
    })?;
    let data = r.f32_vec(count)?.into_iter().map(f64::from).collect();
    r.finish()?;
    DepthMap::new(height, width, data)
}

pub fn read_depth_map(path: impl AsRef<Path>) -> Result<DepthMap> {
    decode_depth_map(&read_file(path.as_ref())?)
}

pub fn write_depth_map(path: impl AsRef<Path>, dm: &DepthMap) -> Result<()> {
    write_file(path.as_ref(), &encode_depth_map(dm))
}
