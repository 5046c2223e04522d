//! Self-describing container for one coded plane.
//!
//! Layout, little-endian:
//! `[magic "MVGC"][version u8][mode u8][W u16][H u16][channels u8][q f32][flags u8][payload_len u32][payload]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MVGC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;

/// The plane was coded against a cross-view prediction.
pub const FLAG_PREDICTED: u8 = 1;
/// Residual symbols use separate tables inside and outside the mask.
pub const FLAG_MASK_CONTEXT: u8 = 2;
/// Image prediction used the reference without warping.
pub const FLAG_NO_WARP: u8 = 4;
const KNOWN_FLAGS: u8 = FLAG_PREDICTED | FLAG_MASK_CONTEXT | FLAG_NO_WARP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Image = 0,
    Depth = 1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Header {
    pub mode: Mode,
    pub width: u16,
    pub height: u16,
    pub channels: u8,
    pub q: f32,
    pub flags: u8,
}

impl Header {
    pub fn new(mode: Mode, width: usize, height: usize, channels: usize, q: f64, flags: u8) -> Result<Self> {
        let dim = |v: usize, what: &str| {
            u16::try_from(v)
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::InvalidParameter(format!("{what} {v} does not fit the container (1..=65535)")))
        };
        let channels = u8::try_from(channels)
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("channel count {channels} out of range")))?;
        let q32 = q as f32;
        if !(q32.is_finite() && q32 > 0.0) {
            return Err(Error::InvalidParameter(format!("quantizer step must be a positive f32, got {q}")));
        }
        Ok(Self { mode, width: dim(width, "width")?, height: dim(height, "height")?, channels, q: q32, flags })
    }

    pub fn has(&self, flag: u8) -> bool {
        self.flags & flag != 0
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width as usize, self.height as usize, self.channels as usize)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub header: Header,
    pub payload: Vec<u8>,
}

impl Bitstream {
    pub fn len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bits per pixel of the whole container, header included.
    pub fn bpp(&self) -> f64 {
        8.0 * self.len() as f64 / self.header.pixel_count() as f64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(h.mode as u8);
        out.extend_from_slice(&h.width.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.push(h.channels);
        out.extend_from_slice(&h.q.to_le_bytes());
        out.push(h.flags);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Parse { offset: 0, msg: "bad magic, expected MVGC".into() });
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Parse { offset: 4, msg: format!("unsupported version {version}") });
        }
        let mode = match r.u8()? {
            0 => Mode::Image,
            1 => Mode::Depth,
            m => return Err(Error::Parse { offset: 5, msg: format!("unknown mode {m}") }),
        };
        let width = r.u16()?;
        let height = r.u16()?;
        let channels = r.u8()?;
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::Parse { offset: 6, msg: "zero dimension".into() });
        }
        let q = f32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::Parse { offset: 11, msg: format!("quantizer step {q} is not positive") });
        }
        let flags = r.u8()?;
        if flags & !KNOWN_FLAGS != 0 {
            return Err(Error::Parse { offset: 15, msg: format!("unknown flag bits {flags:#04x}") });
        }
        let payload_len = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes")) as usize;
        let payload = r.take(payload_len)?.to_vec();
        if r.pos != bytes.len() {
            return Err(Error::Parse { offset: r.pos, msg: "trailing bytes after payload".into() });
        }
        Ok(Self { header: Header { mode, width, height, channels, q, flags }, payload })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Parse {
            offset: self.pos,
            msg: format!("truncated: need {n} bytes, {} left", self.bytes.len() - self.pos),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
}
