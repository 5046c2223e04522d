//! Predictive coding of single image and depth planes.
//!
//! Residuals against the prediction are uniformly quantized and range coded.
//! The prediction is supplied by the caller and must be reproducible by the
//! decoder; both sides reconstruct through the same arithmetic.

use crate::codec::bitstream::{Bitstream, Header, Mode, FLAG_MASK_CONTEXT, FLAG_NO_WARP, FLAG_PREDICTED};
use crate::codec::entropy::{BitModel, IntModel, RangeDecoder, RangeEncoder};
use crate::codec::quant::Quantizer;
use crate::disparity::warp;
use crate::error::{Error, Result};
use crate::plane::{DepthMap, DisparityMap, MaskMap, Plane};

/// Reference for image prediction: `mask ⊙ warp(reference, disparity)`.
///
/// Without a disparity the reference is used unwarped; without a mask the
/// warped reference predicts every pixel and residuals share one context.
#[derive(Debug, Clone, Copy)]
pub struct ImageReference<'a> {
    pub image: &'a Plane,
    pub disparity: Option<&'a DisparityMap>,
    pub mask: Option<&'a MaskMap>,
}

/// Reference for depth prediction: a predicted depth plane and the cells
/// where it holds a value (as produced by cross-view depth prediction).
#[derive(Debug, Clone, Copy)]
pub struct DepthReference<'a> {
    pub depth: &'a DepthMap,
    pub hits: &'a MaskMap,
}

fn image_flags(reference: Option<&ImageReference<'_>>) -> u8 {
    match reference {
        None => 0,
        Some(r) => {
            FLAG_PREDICTED
                | if r.mask.is_some() { FLAG_MASK_CONTEXT } else { 0 }
                | if r.disparity.is_none() { FLAG_NO_WARP } else { 0 }
        }
    }
}

/// Prediction plane and optional per-pixel context for an image.
fn image_prediction(
    reference: Option<&ImageReference<'_>>,
    dims: (usize, usize, usize),
) -> Result<(Plane, Option<Vec<bool>>)> {
    let (w, h, ch) = dims;
    let Some(r) = reference else {
        return Ok((Plane::new(w, h, ch), None));
    };
    r.image.expect_dims("reference image", dims)?;
    let warped = match r.disparity {
        Some(d) => {
            d.plane().expect_dims("disparity", (w, h, 2))?;
            warp(r.image, d)
        }
        None => r.image.clone(),
    };
    let Some(mask) = r.mask else {
        return Ok((warped, None));
    };
    if (mask.width(), mask.height()) != (w, h) {
        return Err(Error::DimensionMismatch {
            what: "mask",
            got: (mask.width(), mask.height(), 1),
            expected: (w, h, 1),
        });
    }
    let pred = Plane::from_fn(w, h, ch, |i, j, c| if mask.get(i, j) { warped.get(i, j, c) } else { 0.0 });
    Ok((pred, Some(mask.data().to_vec())))
}

#[inline]
fn reconstruct_image(pred: f32, s: i32, quant: &Quantizer) -> f32 {
    (pred as f64 + quant.dequantize_one(s)).clamp(0.0, 1.0) as f32
}

#[inline]
fn reconstruct_depth(pred: f32, s: i32, quant: &Quantizer) -> f32 {
    ((pred as f64 + quant.dequantize_one(s)) as f32).max(f32::MIN_POSITIVE)
}

/// Code an image with values in `[0, 1]`. Returns the stream and the
/// reconstruction the decoder will produce.
pub fn encode_image(image: &Plane, reference: Option<&ImageReference<'_>>, q: f64) -> Result<(Bitstream, Plane)> {
    let (w, h, ch) = image.dims();
    let header = Header::new(Mode::Image, w, h, ch, q, image_flags(reference))?;
    let quant = Quantizer::new(header.q as f64)?;
    let (pred, context) = image_prediction(reference, (w, h, ch))?;

    let mut models = [IntModel::default(), IntModel::default()];
    let mut enc = RangeEncoder::new();
    let mut recon = Plane::new(w, h, ch);
    for (k, (&x, &p)) in image.data().iter().zip(pred.data()).enumerate() {
        let s = quant.quantize_one(x as f64 - p as f64)?;
        let class = context.as_ref().is_some_and(|c| c[k / ch]) as usize;
        models[class].encode(&mut enc, s);
        recon.data_mut()[k] = reconstruct_image(p, s, &quant);
    }
    Ok((Bitstream { header, payload: enc.finish() }, recon))
}

pub fn decode_image(bs: &Bitstream, reference: Option<&ImageReference<'_>>) -> Result<Plane> {
    let header = &bs.header;
    if header.mode != Mode::Image {
        return Err(Error::Decode("stream holds a depth plane, not an image".into()));
    }
    if header.flags != image_flags(reference) {
        return Err(Error::Decode(format!(
            "stream flags {:#04x} do not match the supplied reference ({:#04x})",
            header.flags,
            image_flags(reference)
        )));
    }
    let dims = header.dims();
    let quant = Quantizer::new(header.q as f64)?;
    let (pred, context) = image_prediction(reference, dims)?;

    let mut models = [IntModel::default(), IntModel::default()];
    let mut dec = RangeDecoder::new(&bs.payload)?;
    let mut recon = Plane::new(dims.0, dims.1, dims.2);
    for (k, &p) in pred.data().iter().enumerate() {
        let class = context.as_ref().is_some_and(|c| c[k / dims.2]) as usize;
        let s = models[class].decode(&mut dec)?;
        recon.data_mut()[k] = reconstruct_image(p, s, &quant);
    }
    dec.finish()?;
    Ok(recon)
}

/// Context for a validity bit: left and upper neighbour validity, and
/// whether the prediction hit the pixel.
#[inline]
fn validity_context(valid: &[bool], hits: Option<&MaskMap>, w: usize, i: usize, j: usize) -> usize {
    let left = i > 0 && valid[j * w + i - 1];
    let up = j > 0 && valid[(j - 1) * w + i];
    let hit = hits.is_some_and(|m| m.get(i, j));
    left as usize | (up as usize) << 1 | (hit as usize) << 2
}

fn depth_prediction<'a>(
    reference: Option<&DepthReference<'a>>,
    w: usize,
    h: usize,
) -> Result<(Vec<f32>, Option<&'a MaskMap>)> {
    let Some(r) = reference else {
        return Ok((vec![0.0; w * h], None));
    };
    for (what, got) in
        [("predicted depth", (r.depth.width(), r.depth.height())), ("hit mask", (r.hits.width(), r.hits.height()))]
    {
        if got != (w, h) {
            return Err(Error::DimensionMismatch { what, got: (got.0, got.1, 1), expected: (w, h, 1) });
        }
    }
    let pred = r.depth.data().iter().zip(r.hits.data()).map(|(&d, &m)| if m { d } else { 0.0 }).collect();
    Ok((pred, Some(r.hits)))
}

/// Code a depth map. The validity plane goes first as a lossless binary
/// sub-stream, then residuals for valid pixels only.
pub fn encode_depth(depth: &DepthMap, reference: Option<&DepthReference<'_>>, q: f64) -> Result<(Bitstream, DepthMap)> {
    let (w, h) = (depth.width(), depth.height());
    let flags = if reference.is_some() { FLAG_PREDICTED | FLAG_MASK_CONTEXT } else { 0 };
    let header = Header::new(Mode::Depth, w, h, 1, q, flags)?;
    let quant = Quantizer::new(header.q as f64)?;
    let (pred, hits) = depth_prediction(reference, w, h)?;

    let valid: Vec<bool> = depth.validity().data().to_vec();
    let mut enc = RangeEncoder::new();
    let mut validity_models = [BitModel::default(); 8];
    for j in 0..h {
        for i in 0..w {
            let ctx = validity_context(&valid, hits, w, i, j);
            enc.encode(&mut validity_models[ctx], valid[j * w + i]);
        }
    }

    let mut models = [IntModel::default(), IntModel::default()];
    let mut recon = vec![0.0f32; w * h];
    for k in (0..w * h).filter(|&k| valid[k]) {
        let s = quant.quantize_one(depth.data()[k] as f64 - pred[k] as f64)?;
        let class = hits.is_some_and(|m| m.data()[k]) as usize;
        models[class].encode(&mut enc, s);
        recon[k] = reconstruct_depth(pred[k], s, &quant);
    }
    Ok((Bitstream { header, payload: enc.finish() }, DepthMap::from_vec(w, h, recon)?))
}

pub fn decode_depth(bs: &Bitstream, reference: Option<&DepthReference<'_>>) -> Result<DepthMap> {
    let header = &bs.header;
    if header.mode != Mode::Depth || header.channels != 1 {
        return Err(Error::Decode("stream does not hold a single-channel depth plane".into()));
    }
    if header.has(FLAG_PREDICTED) != reference.is_some() {
        return Err(Error::Decode(format!(
            "stream {} a depth reference but {} was supplied",
            if header.has(FLAG_PREDICTED) { "needs" } else { "was coded without" },
            if reference.is_some() { "one" } else { "none" }
        )));
    }
    let (w, h, _) = header.dims();
    let quant = Quantizer::new(header.q as f64)?;
    let (pred, hits) = depth_prediction(reference, w, h)?;

    let mut dec = RangeDecoder::new(&bs.payload)?;
    let mut validity_models = [BitModel::default(); 8];
    let mut valid = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            let ctx = validity_context(&valid, hits, w, i, j);
            valid[j * w + i] = dec.decode(&mut validity_models[ctx])?;
        }
    }

    let mut models = [IntModel::default(), IntModel::default()];
    let mut recon = vec![0.0f32; w * h];
    for k in (0..w * h).filter(|&k| valid[k]) {
        let class = hits.is_some_and(|m| m.data()[k]) as usize;
        let s = models[class].decode(&mut dec)?;
        recon[k] = reconstruct_depth(pred[k], s, &quant);
    }
    dec.finish()?;
    DepthMap::from_vec(w, h, recon)
}
