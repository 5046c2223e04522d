use nalgebra::{Point2, Vector3};
use rayon::prelude::*;

use super::{GaussianScene, Rgb};
use crate::geometry::Camera;
use crate::plane::{DepthMap, MaskMap, Plane};

/// Contributions below this opacity are culled.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Opacity ceiling applied before compositing.
pub const ALPHA_MAX: f64 = 0.9999;
/// Gaussians whose camera-space center is not beyond this depth are clipped.
pub const Z_NEAR: f64 = 1e-4;
/// Transmittance level that selects the median depth sample.
pub const MEDIAN_THRESHOLD: f64 = 0.5;

/// One compositing element along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub alpha: f64,
    pub color: Rgb,
    /// Camera-space z of the Gaussian center.
    pub z: f64,
}

impl Contribution {
    pub fn new(alpha: f64, color: Rgb, z: f64) -> Self {
        Self { alpha, color, z }
    }
}

/// Per-ray compositing elements for `pixel` (continuous coordinates), sorted
/// front to back by center depth. Ties keep scene order.
pub fn ray_contributions(scene: &GaussianScene, camera: &Camera, pixel: Point2<f64>) -> Vec<Contribution> {
    let centers: Vec<Vector3<f64>> =
        scene.gaussians.iter().map(|g| camera.extrinsics.world_to_camera(&g.center)).collect();
    contributions_with_centers(scene, &centers, camera, pixel)
}

fn contributions_with_centers(
    scene: &GaussianScene,
    centers: &[Vector3<f64>],
    camera: &Camera,
    pixel: Point2<f64>,
) -> Vec<Contribution> {
    let dir = camera.intrinsics.unproject(pixel, 1.0).normalize();
    let mut out: Vec<Contribution> =
        scene.gaussians.iter().zip(centers).filter_map(|(g, c)| contribution(g, c, &dir)).collect();
    out.sort_by(|a, b| a.z.total_cmp(&b.z));
    out
}

/// Ray distance beyond which a Gaussian falls under `ALPHA_MIN`, padded so
/// the cull never drops a contribution the full evaluation would keep.
fn cull_radius(sigma: f64, opacity: f64) -> f64 {
    let ratio = opacity / ALPHA_MIN;
    if ratio <= 1.0 {
        return -1.0;
    }
    sigma * (2.0 * ratio.ln()).sqrt() * (1.0 + 1e-6) + 1e-9
}

/// As [`contributions_with_centers`], restricted to the Gaussians in `subset`
/// (ascending scene indices, so tie order is unchanged).
fn contributions_subset(
    scene: &GaussianScene,
    centers: &[Vector3<f64>],
    subset: &[usize],
    camera: &Camera,
    pixel: Point2<f64>,
) -> Vec<Contribution> {
    let dir = camera.intrinsics.unproject(pixel, 1.0).normalize();
    let mut out: Vec<Contribution> =
        subset.iter().filter_map(|&k| contribution(&scene.gaussians[k], &centers[k], &dir)).collect();
    out.sort_by(|a, b| a.z.total_cmp(&b.z));
    out
}

#[inline]
fn contribution(g: &super::Gaussian3D, c: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Contribution> {
    if c.z <= Z_NEAR {
        return None;
    }
    let along = c.dot(dir);
    let r2 = (c.norm_squared() - along * along).max(0.0);
    let alpha = g.opacity * (-r2 / (2.0 * g.sigma * g.sigma)).exp();
    (alpha >= ALPHA_MIN).then(|| Contribution::new(alpha.min(ALPHA_MAX), g.color, c.z))
}

/// Front-to-back alpha compositing. Returns the pixel color and the
/// transmittances `T_1..=T_{M+1}`, the last one weighting the background.
pub fn composite(contribs: &[Contribution], background: Rgb) -> (Rgb, Vec<f64>) {
    let mut transmittance = Vec::with_capacity(contribs.len() + 1);
    let mut color = [0.0; 3];
    let mut t = 1.0;
    for c in contribs {
        transmittance.push(t);
        let w = t * c.alpha;
        for (acc, v) in color.iter_mut().zip(c.color) {
            *acc += w * v;
        }
        t *= 1.0 - c.alpha;
    }
    transmittance.push(t);
    for (acc, v) in color.iter_mut().zip(background) {
        *acc += t * v;
    }
    (color, transmittance)
}

/// Depth of the first element whose incoming transmittance is below one half.
/// Returns `(0.0, false)` when no such element exists.
pub fn median_depth(contribs: &[Contribution]) -> (f64, bool) {
    let mut t = 1.0;
    for c in contribs {
        if t < MEDIAN_THRESHOLD {
            return (c.z, true);
        }
        t *= 1.0 - c.alpha;
    }
    (0.0, false)
}

/// Blending-weight average of element depths, 0 when nothing contributes.
pub fn weighted_avg_depth(contribs: &[Contribution]) -> f64 {
    let mut t = 1.0;
    let (mut num, mut den) = (0.0, 0.0);
    for c in contribs {
        let w = t * c.alpha;
        num += w * c.z;
        den += w;
        t *= 1.0 - c.alpha;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: Plane,
    pub median_depth: DepthMap,
    pub weighted_depth: DepthMap,
    pub coverage: MaskMap,
}

/// rgb, median depth, weighted depth, covered
type PixelOut = ([f32; 3], f32, f32, bool);

pub fn render_view(scene: &GaussianScene, camera: &Camera) -> RenderOutput {
    let (w, h) = (camera.width(), camera.height());
    let centers: Vec<Vector3<f64>> =
        scene.gaussians.iter().map(|g| camera.extrinsics.world_to_camera(&g.center)).collect();

    let reach: Vec<f64> = scene.gaussians.iter().map(|g| cull_radius(g.sigma, g.opacity)).collect();

    // rows are computed independently
    let rows: Vec<Vec<PixelOut>> = (0..h)
        .into_par_iter()
        .map(|j| {
            // every ray of row j lies in the plane spanned by x and (0, b, 1)
            let b = (j as f64 + 0.5 - camera.intrinsics.cy) / camera.intrinsics.fy;
            let normal = Vector3::new(0.0, -1.0, b).normalize();
            let near: Vec<usize> = (0..centers.len()).filter(|&g| normal.dot(&centers[g]).abs() <= reach[g]).collect();
            (0..w)
                .map(|i| {
                    let px = Point2::new(i as f64 + 0.5, j as f64 + 0.5);
                    let contribs = contributions_subset(scene, &centers, &near, camera, px);
                    let (rgb, _) = composite(&contribs, scene.background);
                    let (median, covered) = median_depth(&contribs);
                    let weighted = weighted_avg_depth(&contribs);
                    (
                        rgb.map(|v| v.clamp(0.0, 1.0) as f32),
                        if covered { median as f32 } else { 0.0 },
                        weighted as f32,
                        covered,
                    )
                })
                .collect()
        })
        .collect();

    let mut color = Plane::new(w, h, 3);
    let mut median = DepthMap::new(w, h);
    let mut weighted = DepthMap::new(w, h);
    let mut coverage = MaskMap::new(w, h, false);
    for (j, row) in rows.into_iter().enumerate() {
        for (i, (rgb, m, wd, cov)) in row.into_iter().enumerate() {
            for (k, v) in rgb.into_iter().enumerate() {
                color.set(i, j, k, v);
            }
            median.set(i, j, m);
            weighted.set(i, j, wd);
            coverage.set(i, j, cov && m > 0.0);
        }
    }
    RenderOutput { color, median_depth: median, weighted_depth: weighted, coverage }
}
