use crate::error::{Error, Result};

/// Uniform scalar quantizer with step `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    step: f64,
}

impl Quantizer {
    pub fn new(step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("quantizer step must be positive, got {step}")));
        }
        Ok(Self { step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `round(x / q)`, ties away from zero.
    #[inline]
    pub fn quantize_one(&self, x: f64) -> Result<i32> {
        let s = (x / self.step).round();
        if !(s.abs() <= i32::MAX as f64) {
            return Err(Error::SymbolRange(s));
        }
        Ok(s as i32)
    }

    #[inline]
    pub fn dequantize_one(&self, s: i32) -> f64 {
        s as f64 * self.step
    }
}

pub fn quantize(residual: &[f64], q: f64) -> Result<Vec<i32>> {
    let quant = Quantizer::new(q)?;
    residual.iter().map(|&r| quant.quantize_one(r)).collect()
}

pub fn dequantize(symbols: &[i32], q: f64) -> Result<Vec<f64>> {
    let quant = Quantizer::new(q)?;
    Ok(symbols.iter().map(|&s| quant.dequantize_one(s)).collect())
}
