//! Binary portable pixmaps (P6) with maxval 255.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plane::Plane;

/// Encode a 3-channel plane in `[0, 1]` as P6, rounding to 8 bits.
pub fn encode_ppm(image: &Plane) -> Result<Vec<u8>> {
    if image.channels() != 3 {
        return Err(Error::DimensionMismatch {
            what: "P6 image",
            got: image.dims(),
            expected: (image.width(), image.height(), 3),
        });
    }
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Plane> {
    let mut pos = 0;
    if bytes.get(..2) != Some(b"P6") {
        return Err(Error::Parse { offset: 0, msg: "not a binary PPM (expected P6)".into() });
    }
    pos += 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse { offset: pos, msg: "expected a header number".into() });
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Parse { offset: start, msg: "header number out of range".into() })?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Unsupported(format!("PPM maxval {maxval}; only 255 is supported")));
    }
    if w == 0 || h == 0 {
        return Err(Error::Parse { offset: pos, msg: format!("zero image size {w}x{h}") });
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Parse { offset: pos, msg: "expected whitespace after maxval".into() });
    }
    pos += 1;
    let n = w * h * 3;
    let data = &bytes[pos..];
    if data.len() < n {
        return Err(Error::Parse {
            offset: bytes.len(),
            msg: format!("truncated pixel data: need {n} bytes, found {}", data.len()),
        });
    }
    Plane::from_vec(w, h, 3, data[..n].iter().map(|&b| b as f32 / 255.0).collect())
}

pub fn write_ppm(path: &Path, image: &Plane) -> Result<()> {
    fs::write(path, encode_ppm(image)?)?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<Plane> {
    decode_ppm(&fs::read(path)?)
}
