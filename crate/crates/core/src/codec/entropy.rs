//! Adaptive binary range coder and the integer binarization built on it.
//!
//! The coder is a 32-bit carry-propagating range coder with byte-wise
//! renormalization. Probabilities come from per-context occurrence counts
//! that start at 1/1 and are halved once their sum exceeds 2¹⁶.
//!
//! Integers are binarized as: zero flag, sign, unary exponent
//! `k = ⌊log2 |s|⌋`, then the `k` bits below the leading one, each with its
//! own adaptive context.

use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;
const COUNT_LIMIT: u32 = 1 << 16;
const EXP_CONTEXTS: usize = 33;

#[derive(Debug, Clone, Copy)]
pub struct BitModel {
    zeros: u32,
    ones: u32,
}

impl Default for BitModel {
    fn default() -> Self {
        Self { zeros: 1, ones: 1 }
    }
}

impl BitModel {
    #[inline]
    fn split(&self, range: u32) -> u32 {
        (range / (self.zeros + self.ones)) * self.zeros
    }

    #[inline]
    fn update(&mut self, bit: bool) {
        if bit {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
        if self.zeros + self.ones > COUNT_LIMIT {
            self.zeros = self.zeros.div_ceil(2);
            self.ones = self.ones.div_ceil(2);
        }
    }
}

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self { low: 0, range: u32::MAX, cache: 0, cache_size: 1, out: Vec::new() }
    }

    pub fn encode(&mut self, model: &mut BitModel, bit: bool) {
        let bound = model.split(self.range);
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        model.update(bit);
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut dec = Self { code: 0, range: u32::MAX, input, pos: 0 };
        for _ in 0..5 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self
            .input
            .get(self.pos)
            .ok_or_else(|| Error::Decode(format!("payload truncated at byte {}", self.pos)))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn decode(&mut self, model: &mut BitModel) -> Result<bool> {
        let bound = model.split(self.range);
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        model.update(bit);
        while self.range < TOP {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte()? as u32;
        }
        Ok(bit)
    }

    /// Errors unless every payload byte was consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos != self.input.len() {
            return Err(Error::Decode(format!(
                "{} trailing payload bytes after the last symbol",
                self.input.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Adaptive models for one context class of integer symbols.
#[derive(Debug, Clone)]
pub struct IntModel {
    zero: BitModel,
    sign: BitModel,
    exponent: [BitModel; EXP_CONTEXTS],
    mantissa: Vec<BitModel>,
}

impl Default for IntModel {
    fn default() -> Self {
        Self {
            zero: BitModel::default(),
            sign: BitModel::default(),
            exponent: [BitModel::default(); EXP_CONTEXTS],
            mantissa: vec![BitModel::default(); EXP_CONTEXTS * EXP_CONTEXTS],
        }
    }
}

impl IntModel {
    pub fn encode(&mut self, enc: &mut RangeEncoder, s: i32) {
        enc.encode(&mut self.zero, s == 0);
        if s == 0 {
            return;
        }
        enc.encode(&mut self.sign, s < 0);
        let m = s.unsigned_abs();
        let k = 31 - m.leading_zeros() as usize;
        for j in 0..k {
            enc.encode(&mut self.exponent[j], true);
        }
        if k < 31 {
            enc.encode(&mut self.exponent[k], false);
        }
        for pos in (0..k).rev() {
            enc.encode(&mut self.mantissa[k * EXP_CONTEXTS + pos], (m >> pos) & 1 == 1);
        }
    }

    pub fn decode(&mut self, dec: &mut RangeDecoder<'_>) -> Result<i32> {
        if dec.decode(&mut self.zero)? {
            return Ok(0);
        }
        let negative = dec.decode(&mut self.sign)?;
        let mut k = 0;
        while k < 31 && dec.decode(&mut self.exponent[k])? {
            k += 1;
        }
        let mut m: u32 = 1;
        for pos in (0..k).rev() {
            let bit = dec.decode(&mut self.mantissa[k * EXP_CONTEXTS + pos])?;
            m = (m << 1) | bit as u32;
        }
        if negative {
            // m ≤ 2³¹ here; 2³¹ maps to i32::MIN
            Ok((m as i64).wrapping_neg() as i32)
        } else {
            i32::try_from(m).map_err(|_| Error::Decode(format!("symbol magnitude {m} overflows")))
        }
    }
}

fn check_context(n: usize, context: Option<&[bool]>) -> Result<()> {
    match context {
        Some(c) if c.len() != n => {
            Err(Error::InvalidParameter(format!("context plane has {} entries for {} symbols", c.len(), n)))
        }
        _ => Ok(()),
    }
}

/// Range-code `symbols`, with separate adaptive tables for context-set and
/// context-clear positions when a context plane is given.
pub fn range_encode(symbols: &[i32], context: Option<&[bool]>) -> Result<Vec<u8>> {
    check_context(symbols.len(), context)?;
    let mut models = [IntModel::default(), IntModel::default()];
    let mut enc = RangeEncoder::new();
    for (k, &s) in symbols.iter().enumerate() {
        let class = context.is_some_and(|c| c[k]) as usize;
        models[class].encode(&mut enc, s);
    }
    Ok(enc.finish())
}

pub fn range_decode(bytes: &[u8], n: usize, context: Option<&[bool]>) -> Result<Vec<i32>> {
    check_context(n, context)?;
    let mut models = [IntModel::default(), IntModel::default()];
    let mut dec = RangeDecoder::new(bytes)?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let class = context.is_some_and(|c| c[k]) as usize;
        out.push(models[class].decode(&mut dec)?);
    }
    dec.finish()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_mixed_symbols() {
        let syms = vec![0, 1, -1, 2, -2, 100, -100, 65535, i32::MAX, i32::MIN, i32::MIN + 1, 0, 0, 7];
        let bytes = range_encode(&syms, None).unwrap();
        assert_eq!(range_decode(&bytes, syms.len(), None).unwrap(), syms);
    }

    #[test]
    fn round_trip_with_context() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let syms: Vec<i32> = (0..5000).map(|_| rng.gen_range(-40..40)).collect();
        let ctx: Vec<bool> = (0..5000).map(|_| rng.gen()).collect();
        let bytes = range_encode(&syms, Some(&ctx)).unwrap();
        assert_eq!(range_decode(&bytes, syms.len(), Some(&ctx)).unwrap(), syms);
    }

    #[test]
    fn empty_input() {
        let bytes = range_encode(&[], None).unwrap();
        assert_eq!(range_decode(&bytes, 0, None).unwrap(), Vec::<i32>::new());
    }

    #[test]
    fn zeros_compress_to_a_few_bytes() {
        let bytes = range_encode(&vec![0; 10_000], None).unwrap();
        assert!(bytes.len() <= 64, "{} bytes", bytes.len());
    }

    #[test]
    fn uniform_bytes_do_not_compress() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let syms: Vec<i32> = (0..n).map(|_| rng.gen_range(-128..=127)).collect();
        let bytes = range_encode(&syms, None).unwrap();
        assert!(bytes.len() as f64 >= 0.95 * n as f64, "{} bytes", bytes.len());
    }

    #[test]
    fn truncation_and_count_mismatch_are_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let syms: Vec<i32> = (0..2000).map(|_| rng.gen_range(-500..500)).collect();
        let bytes = range_encode(&syms, None).unwrap();
        for cut in [1, 2, 5, bytes.len() / 2] {
            assert!(range_decode(&bytes[..bytes.len() - cut], syms.len(), None).is_err(), "cut {cut}");
        }
        assert!(range_decode(&bytes, syms.len() - 10, None).is_err());
        assert!(range_decode(&bytes, syms.len() + 10, None).is_err());
        assert!(range_decode(&bytes, syms.len(), Some(&[true; 3])).is_err());
    }

    #[test]
    fn counts_renormalize() {
        let mut m = BitModel::default();
        for _ in 0..200_000 {
            m.update(false);
        }
        assert!(m.zeros + m.ones <= COUNT_LIMIT + 1);
        assert!(m.ones >= 1);
    }
}
