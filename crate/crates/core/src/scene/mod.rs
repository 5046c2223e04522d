//! Isotropic 3D Gaussian scenes and a per-ray compositing renderer.

mod render;
mod synth;

use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use render::{
    composite, median_depth, ray_contributions, render_view, weighted_avg_depth, Contribution, RenderOutput, ALPHA_MAX,
    ALPHA_MIN, MEDIAN_THRESHOLD, Z_NEAR,
};
pub use synth::{synthesize_scene, two_wall_scene, ArcSpec, Bbox, TwoWallSpec};

pub type Rgb = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    pub center: Point3<f64>,
    pub sigma: f64,
    pub opacity: f64,
    pub color: Rgb,
}

impl Gaussian3D {
    pub fn new(center: Point3<f64>, sigma: f64, opacity: f64, color: Rgb) -> Result<Self> {
        let g = Self { center, sigma, opacity, color };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidScene("gaussian center must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidScene(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::InvalidScene(format!("opacity must be in [0, 1], got {}", self.opacity)));
        }
        if !self.color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::InvalidScene(format!("color must be in [0, 1], got {:?}", self.color)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScene {
    pub gaussians: Vec<Gaussian3D>,
    pub background: Rgb,
}

impl GaussianScene {
    pub fn new(gaussians: Vec<Gaussian3D>, background: Rgb) -> Result<Self> {
        for g in &gaussians {
            g.validate()?;
        }
        if !background.iter().all(|c| (0.0..=1.0).contains(c)) {
            return Err(Error::InvalidScene(format!("background must be in [0, 1], got {background:?}")));
        }
        Ok(Self { gaussians, background })
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SceneFile {
            gaussians: self
                .gaussians
                .iter()
                .map(|g| GaussianRecord {
                    center: [g.center.x, g.center.y, g.center.z],
                    sigma: g.sigma,
                    opacity: g.opacity,
                    color: g.color,
                })
                .collect(),
            background: self.background,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(s)?;
        let gaussians = file
            .gaussians
            .into_iter()
            .enumerate()
            .map(|(idx, r)| {
                Gaussian3D::new(Point3::from(r.center), r.sigma, r.opacity, r.color)
                    .map_err(|e| Error::InvalidScene(format!("gaussian {idx}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(gaussians, file.background)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GaussianRecord {
    center: [f64; 3],
    sigma: f64,
    opacity: f64,
    color: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    gaussians: Vec<GaussianRecord>,
    #[serde(default)]
    background: [f64; 3],
}
