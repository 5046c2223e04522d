use serde::Serialize;

use crate::error::{Error, Result};
use crate::plane::{MaskMap, Plane};

/// PSNR reported for a perfect reconstruction.
pub const PSNR_CAP: f64 = 99.0;

/// One sample on a rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub bpp: f64,
    pub psnr: f64,
    pub mse: f64,
}

impl RatePoint {
    pub fn new(bits: f64, pixels: usize, mse: f64, peak: f64) -> Self {
        Self { bpp: bits / pixels as f64, psnr: psnr_from_mse(mse, peak), mse }
    }
}

/// Sum of squared differences and the number of samples, restricted to
/// `mask` when given (all channels of a selected pixel count).
pub fn squared_error(a: &Plane, b: &Plane, mask: Option<&MaskMap>) -> Result<(f64, usize)> {
    b.expect_dims("second plane", a.dims())?;
    if let Some(m) = mask {
        if (m.width(), m.height()) != (a.width(), a.height()) {
            return Err(Error::DimensionMismatch {
                what: "metric mask",
                got: (m.width(), m.height(), 1),
                expected: (a.width(), a.height(), 1),
            });
        }
    }
    let ch = a.channels();
    let mut sum = 0.0;
    let mut n = 0;
    for (k, (x, y)) in a.data().iter().zip(b.data()).enumerate() {
        if mask.is_some_and(|m| !m.data()[k / ch]) {
            continue;
        }
        let d = *x as f64 - *y as f64;
        sum += d * d;
        n += 1;
    }
    Ok((sum, n))
}

pub fn mse(a: &Plane, b: &Plane, mask: Option<&MaskMap>) -> Result<f64> {
    let (sum, n) = squared_error(a, b, mask)?;
    if n == 0 {
        return Err(Error::InvalidParameter("metric over an empty pixel set".into()));
    }
    Ok(sum / n as f64)
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP)
}

pub fn psnr(a: &Plane, b: &Plane, peak: f64, mask: Option<&MaskMap>) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("peak must be positive, got {peak}")));
    }
    Ok(psnr_from_mse(mse(a, b, mask)?, peak))
}
