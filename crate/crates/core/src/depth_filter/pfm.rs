//! Single-channel portable float map (`Pf`) I/O.
//!
//! Files are written little-endian (scale `-1.0`), bottom row first, with
//! invalid depths stored as `0.0`. Both byte orders are accepted on read.

use std::fs;
use std::path::Path;

use super::{DepthError, DepthMap};
use crate::real::Real;

fn bad(msg: impl Into<String>) -> DepthError {
    DepthError::Pfm(msg.into())
}

pub fn encode_pfm<T: Real>(map: &DepthMap<T>) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            let i = y * w + x;
            let v = if map.is_valid(i) {
                map.values()[i].to_f32().unwrap_or(0.0)
            } else {
                0.0
            };
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Reads the next whitespace-delimited header token starting at `*pos`.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str, DepthError> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(bad("truncated header"));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| bad("header is not ASCII"))
}

pub fn decode_pfm<T: Real>(bytes: &[u8]) -> Result<DepthMap<T>, DepthError> {
    let mut pos = 0;
    match token(bytes, &mut pos)? {
        "Pf" => {}
        "PF" => return Err(bad("color PFM is not a depth map")),
        other => return Err(bad(format!("unknown magic `{other}`"))),
    }
    let width: usize = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| bad("invalid width"))?;
    let height: usize = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| bad("invalid height"))?;
    let scale: f64 = token(bytes, &mut pos)?
        .parse()
        .map_err(|_| bad("invalid scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be non-zero"));
    }
    // Exactly one whitespace byte separates the header from the data.
    pos += 1;
    let expected = width * height * 4;
    let data = bytes.get(pos..).ok_or_else(|| bad("missing pixel data"))?;
    if data.len() != expected {
        return Err(bad(format!(
            "expected {expected} data bytes, found {}",
            data.len()
        )));
    }
    let little = scale < 0.0;
    let mut values = vec![T::zero(); width * height];
    for (k, chunk) in data.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (row, x) = (k / width, k % width);
        let y = height - 1 - row;
        values[y * width + x] = T::from_f32(v).unwrap_or_else(T::nan);
    }
    DepthMap::new(width, height, values)
}

pub fn read_pfm<T: Real>(path: &Path) -> Result<DepthMap<T>, DepthError> {
    let bytes = fs::read(path).map_err(|e| DepthError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    decode_pfm(&bytes)
}

pub fn write_pfm<T: Real>(map: &DepthMap<T>, path: &Path) -> Result<(), DepthError> {
    fs::write(path, encode_pfm(map)).map_err(|e| DepthError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
