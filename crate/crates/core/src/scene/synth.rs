//! Deterministic synthetic scenes and camera rigs used by tests and the
//! experiment harness.

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Gaussian3D, GaussianScene};
use crate::error::{Error, Result};
use crate::geometry::{Camera, Extrinsics, Intrinsics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bbox {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Bbox {
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        Self { min, max }
    }

    pub fn cube(half: f64) -> Self {
        Self::new(Point3::new(-half, -half, -half), Point3::new(half, half, half))
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn max_extent(&self) -> f64 {
        (self.max - self.min).max()
    }

    fn validate(&self) -> Result<()> {
        let ok = (0..3).all(|k| self.min[k].is_finite() && self.max[k].is_finite() && self.max[k] > self.min[k]);
        if !ok {
            return Err(Error::InvalidParameter(format!("degenerate bounding box {:?} .. {:?}", self.min, self.max)));
        }
        Ok(())
    }
}

/// Cameras on a horizontal circle around the scene center, all looking at it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub radius: f64,
    /// Angle between consecutive cameras, degrees.
    pub spacing_deg: f64,
    pub count: usize,
    pub focal: f64,
    pub width: usize,
    pub height: usize,
}

impl ArcSpec {
    fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidParameter(format!("arc radius must be positive, got {}", self.radius)));
        }
        if !self.spacing_deg.is_finite() {
            return Err(Error::InvalidParameter("arc spacing must be finite".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidParameter("arc must hold at least one camera".into()));
        }
        Ok(())
    }

    /// Cameras ordered along the arc, centered on the `-z` side of `target`.
    pub fn cameras(&self, target: Point3<f64>) -> Result<Vec<Camera>> {
        self.validate()?;
        let k = Intrinsics::centered(self.focal, self.width, self.height)?;
        let mid = (self.count as f64 - 1.0) / 2.0;
        (0..self.count)
            .map(|n| {
                let theta = ((n as f64 - mid) * self.spacing_deg).to_radians();
                let eye = target + self.radius * Vector3::new(theta.sin(), 0.0, -theta.cos());
                Ok(Camera::new(k, Extrinsics::look_at(eye, target, Vector3::y())?))
            })
            .collect()
    }
}

/// Random isotropic Gaussians inside `bbox`, seen from an arc of cameras.
pub fn synthesize_scene(
    seed: u64,
    n_gaussians: usize,
    bbox: Bbox,
    arc: &ArcSpec,
) -> Result<(GaussianScene, Vec<Camera>)> {
    if n_gaussians == 0 {
        return Err(Error::InvalidParameter("n_gaussians must be positive".into()));
    }
    bbox.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = bbox.max_extent();
    let gaussians = (0..n_gaussians)
        .map(|_| {
            let center = Point3::new(
                rng.gen_range(bbox.min.x..bbox.max.x),
                rng.gen_range(bbox.min.y..bbox.max.y),
                rng.gen_range(bbox.min.z..bbox.max.z),
            );
            let sigma = extent * rng.gen_range(0.015..0.035);
            let opacity = rng.gen_range(0.6..1.0);
            let color = [rng.gen(), rng.gen(), rng.gen()];
            Gaussian3D { center, sigma, opacity, color }
        })
        .collect();
    let scene = GaussianScene::new(gaussians, [0.0; 3])?;
    Ok((scene, arc.cameras(bbox.center())?))
}

/// Two fronto-parallel textured walls: a semi-transparent band in front of an
/// opaque backdrop, seen by a target camera at the origin and a reference
/// camera shifted along `+x`. Both look down `+z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoWallSpec {
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub baseline: f64,
    pub z_front: f64,
    pub z_back: f64,
    /// Grid pitch of the front wall's Gaussians, scene units.
    pub front_pitch: f64,
    /// Grid pitch of the back wall's Gaussians, scene units.
    pub back_pitch: f64,
    /// Opacity range of front-wall Gaussians.
    pub front_opacity: (f64, f64),
}

impl Default for TwoWallSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            focal: 60.0,
            baseline: 0.3,
            z_front: 2.0,
            z_back: 4.0,
            front_pitch: 0.07,
            back_pitch: 0.1,
            front_opacity: (0.4, 0.7),
        }
    }
}

/// Returns the scene plus `(target, reference)` cameras.
pub fn two_wall_scene(seed: u64, spec: &TwoWallSpec) -> Result<(GaussianScene, Camera, Camera)> {
    if !(spec.z_front > 0.0 && spec.z_back > spec.z_front) {
        return Err(Error::InvalidParameter("walls must satisfy 0 < z_front < z_back".into()));
    }
    if !(spec.front_pitch > 0.0 && spec.back_pitch > 0.0) {
        return Err(Error::InvalidParameter("wall pitches must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Intrinsics::centered(spec.focal, spec.width, spec.height)?;
    let target = Camera::new(k, Extrinsics::identity());
    // world -> camera translation is -center
    let reference = Camera::new(k, Extrinsics::from_translation(Vector3::new(-spec.baseline, 0.0, 0.0)));

    let mut gaussians = Vec::new();
    let mut wall = |z: f64, pitch: f64, x_range: (f64, f64), y_half: f64, opacity: (f64, f64)| {
        let nx = ((x_range.1 - x_range.0) / pitch).ceil() as usize + 1;
        let ny = (2.0 * y_half / pitch).ceil() as usize + 1;
        for iy in 0..ny {
            for ix in 0..nx {
                let jitter = 0.15 * pitch;
                let x = x_range.0 + ix as f64 * pitch + rng.gen_range(-jitter..jitter);
                let y = -y_half + iy as f64 * pitch + rng.gen_range(-jitter..jitter);
                gaussians.push(Gaussian3D {
                    center: Point3::new(x, y, z),
                    sigma: 0.7 * pitch,
                    opacity: rng.gen_range(opacity.0..opacity.1),
                    color: [rng.gen(), rng.gen(), rng.gen()],
                });
            }
        }
    };

    // half-extent of the union of both frusta at each depth, with margin
    let half_w = |z: f64| (spec.width as f64 / 2.0) / spec.focal * z + 0.2;
    let half_h = |z: f64| (spec.height as f64 / 2.0) / spec.focal * z + 0.2;
    let band = 0.3 * half_w(spec.z_front);
    wall(spec.z_front, spec.front_pitch, (-band, band), half_h(spec.z_front), spec.front_opacity);
    wall(
        spec.z_back,
        spec.back_pitch,
        (-half_w(spec.z_back), half_w(spec.z_back) + spec.baseline),
        half_h(spec.z_back),
        (0.8, 1.0),
    );
    let scene = GaussianScene::new(gaussians, [0.0; 3])?;
    Ok((scene, target, reference))
}
