//! Dense per-pixel fields: images, depth maps, disparity maps and masks.
//!
//! Storage is row-major with channels interleaved; `(i, j)` is
//! (column, row), so `i` runs along the width.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self { width, height, channels, data: vec![value; width * height * channels] }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::InvalidParameter(format!(
                "plane data has {} samples, expected {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for j in 0..height {
            for i in 0..width {
                for c in 0..channels {
                    data.push(f(i, j, c));
                }
            }
        }
        Self { width, height, channels, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, c: usize) -> usize {
        (j * self.width + i) * self.channels + c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f32 {
        self.data[self.index(i, j, c)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, c: usize, v: f32) {
        let idx = self.index(i, j, c);
        self.data[idx] = v;
    }

    pub fn pixel(&self, i: usize, j: usize) -> &[f32] {
        let start = self.index(i, j, 0);
        &self.data[start..start + self.channels]
    }

    pub fn expect_dims(&self, what: &'static str, expected: (usize, usize, usize)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch { what, got: self.dims(), expected });
        }
        Ok(())
    }
}

/// Depth along the camera z axis. A pixel is valid iff its depth is finite and
/// strictly positive; invalid pixels hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap(Plane);

impl DepthMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self(Plane::new(width, height, 1))
    }

    /// Wraps a single-channel plane; non-finite and non-positive samples are
    /// normalized to 0 (invalid).
    pub fn from_plane(mut plane: Plane) -> Result<Self> {
        if plane.channels() != 1 {
            return Err(Error::InvalidParameter(format!("depth map must have 1 channel, got {}", plane.channels())));
        }
        for v in plane.data_mut() {
            if !(v.is_finite() && *v > 0.0) {
                *v = 0.0;
            }
        }
        Ok(Self(plane))
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        Self::from_plane(Plane::from_vec(width, height, 1, data)?)
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    pub fn data(&self) -> &[f32] {
        self.0.data()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.0.get(i, j, 0)
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.get(i, j) > 0.0
    }

    /// Stores `depth` when it is a valid depth, otherwise marks the pixel invalid.
    pub fn set(&mut self, i: usize, j: usize, depth: f32) {
        let v = if depth.is_finite() && depth > 0.0 { depth } else { 0.0 };
        self.0.set(i, j, 0, v);
    }

    pub fn valid_count(&self) -> usize {
        self.data().iter().filter(|&&d| d > 0.0).count()
    }

    pub fn validity(&self) -> MaskMap {
        MaskMap::from_fn(self.width(), self.height(), |i, j| self.is_valid(i, j))
    }

    /// Mean over valid pixels, or `None` when nothing is valid.
    pub fn mean_valid(&self) -> Option<f64> {
        let (sum, n) =
            self.data().iter().filter(|&&d| d > 0.0).fold((0.0f64, 0usize), |(s, n), &d| (s + d as f64, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

/// Two channels `(dx, dy)` in pixels. Entries with no meaningful
/// correspondence hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap(Plane);

impl DisparityMap {
    pub fn invalid(width: usize, height: usize) -> Self {
        Self(Plane::filled(width, height, 2, f32::NAN))
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self(Plane::new(width, height, 2))
    }

    pub fn from_plane(plane: Plane) -> Result<Self> {
        if plane.channels() != 2 {
            return Err(Error::InvalidParameter(format!(
                "disparity map must have 2 channels, got {}",
                plane.channels()
            )));
        }
        Ok(Self(plane))
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (f32, f32) {
        (self.0.get(i, j, 0), self.0.get(i, j, 1))
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        let (dx, dy) = self.get(i, j);
        dx.is_finite() && dy.is_finite()
    }

    pub fn set(&mut self, i: usize, j: usize, d: (f32, f32)) {
        self.0.set(i, j, 0, d.0);
        self.0.set(i, j, 1, d.1);
    }

    /// Largest absolute component over valid entries.
    pub fn max_abs(&self) -> f32 {
        self.0.data().iter().filter(|v| v.is_finite()).fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMap {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl MaskMap {
    pub fn new(width: usize, height: usize, value: bool) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                data.push(f(i, j));
            }
        }
        Self { width, height, data }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "mask has {} entries, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Interprets a single-channel plane, `v > 0.5` being set.
    pub fn from_plane(plane: &Plane) -> Result<Self> {
        if plane.channels() != 1 {
            return Err(Error::InvalidParameter(format!("mask must have 1 channel, got {}", plane.channels())));
        }
        Ok(Self { width: plane.width(), height: plane.height(), data: plane.data().iter().map(|&v| v > 0.5).collect() })
    }

    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[j * self.width + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[j * self.width + i] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn and(&self, other: &MaskMap) -> MaskMap {
        MaskMap {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a && b).collect(),
        }
    }
}
