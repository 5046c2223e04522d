//! MVFD plane files:
//! `[magic "MVFD"][version u8][kind u8][W u32][H u32][channels u8][f32 LE data]`,
//! row-major with interleaved channels.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plane::Plane;

pub const MAGIC: &[u8; 4] = b"MVFD";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneKind {
    Depth = 0,
    Disparity = 1,
    Mask = 2,
    Image = 3,
}

impl PlaneKind {
    fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => Self::Depth,
            1 => Self::Disparity,
            2 => Self::Mask,
            3 => Self::Image,
            _ => return None,
        })
    }
}

pub fn to_bytes(kind: PlaneKind, plane: &Plane) -> Result<Vec<u8>> {
    let too_big = |what: &str| Error::InvalidParameter(format!("{what} does not fit the MVFD header"));
    let w = u32::try_from(plane.width()).map_err(|_| too_big("width"))?;
    let h = u32::try_from(plane.height()).map_err(|_| too_big("height"))?;
    let c = u8::try_from(plane.channels()).map_err(|_| too_big("channel count"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * plane.data().len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(kind as u8);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.push(c);
    for v in plane.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<(PlaneKind, Plane)> {
    let parse = |offset: usize, msg: String| Error::Parse { offset, msg };
    if bytes.len() < HEADER_LEN {
        return Err(parse(bytes.len(), format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(parse(0, "bad magic, expected MVFD".into()));
    }
    if bytes[4] != VERSION {
        return Err(parse(4, format!("unsupported version {}", bytes[4])));
    }
    let kind = PlaneKind::from_u8(bytes[5]).ok_or_else(|| parse(5, format!("unknown plane kind {}", bytes[5])))?;
    let w = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let h = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    let c = bytes[14] as usize;
    if w == 0 || h == 0 || c == 0 {
        return Err(parse(6, format!("zero dimension {w}x{h}x{c}")));
    }
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(c))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| parse(6, "dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < expected {
        return Err(parse(
            bytes.len(),
            format!("truncated data: expected {expected} bytes after the header, found {}", body.len()),
        ));
    }
    if body.len() > expected {
        return Err(parse(HEADER_LEN + expected, "trailing bytes after plane data".into()));
    }
    let data = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
    Ok((kind, Plane::from_vec(w, h, c, data)?))
}

pub fn write_mvfd(path: &Path, kind: PlaneKind, plane: &Plane) -> Result<()> {
    fs::write(path, to_bytes(kind, plane)?)?;
    Ok(())
}

pub fn read_mvfd(path: &Path) -> Result<(PlaneKind, Plane)> {
    from_bytes(&fs::read(path)?)
}
