//! Depth-induced disparity between two calibrated views, the validity /
//! occlusion mask that gates it, and the bilinear warp that applies it.

use nalgebra::Point2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{backproject, project, Camera};
use crate::plane::{DepthMap, DisparityMap, MaskMap, Plane};

/// Default occlusion slack, relative to the mean valid reference depth.
pub const OCCLUSION_EPS_REL: f64 = 1e-3;

/// Absolute occlusion slack for `reference`: `rel` times its mean valid depth
/// (unit depth scale when nothing is valid).
pub fn occlusion_eps(reference: &DepthMap, rel: f64) -> f64 {
    rel * reference.mean_valid().unwrap_or(1.0)
}

fn check_camera_dims(what: &'static str, w: usize, h: usize, cam: &Camera) -> Result<()> {
    if (w, h) != (cam.width(), cam.height()) {
        return Err(Error::DimensionMismatch { what, got: (w, h, 1), expected: (cam.width(), cam.height(), 1) });
    }
    Ok(())
}

/// Per target pixel: back-project with its depth, project into the reference
/// view. Returns the disparity (reference position minus target pixel center)
/// and the depth of each point in the reference camera.
///
/// Invalid source pixels and points at zero reference depth yield a NaN
/// disparity and a projected depth of 0. Points behind the reference camera
/// keep their (negative) projected depth so the mask can reject them.
pub fn estimate_disparity(depth: &DepthMap, cam: &Camera, cam_ref: &Camera) -> Result<(DisparityMap, Plane)> {
    let (w, h) = (depth.width(), depth.height());
    check_camera_dims("target depth map", w, h, cam)?;

    let rows: Vec<Vec<(f32, f32, f32)>> = (0..h)
        .into_par_iter()
        .map(|j| {
            (0..w)
                .map(|i| {
                    const INVALID: (f32, f32, f32) = (f32::NAN, f32::NAN, 0.0);
                    if !depth.is_valid(i, j) {
                        return INVALID;
                    }
                    let center = Point2::new(i as f64 + 0.5, j as f64 + 0.5);
                    let Ok(world) = backproject(center, depth.get(i, j) as f64, &cam.intrinsics, &cam.extrinsics)
                    else {
                        return INVALID;
                    };
                    match project(&world, &cam_ref.intrinsics, &cam_ref.extrinsics) {
                        Ok((px, d)) => ((px.x - center.x) as f32, (px.y - center.y) as f32, d as f32),
                        Err(_) => INVALID,
                    }
                })
                .collect()
        })
        .collect();

    let mut disparity = DisparityMap::invalid(w, h);
    let mut projected = Plane::new(w, h, 1);
    for (j, row) in rows.into_iter().enumerate() {
        for (i, (dx, dy, d)) in row.into_iter().enumerate() {
            disparity.set(i, j, (dx, dy));
            projected.set(i, j, 0, d);
        }
    }
    Ok((disparity, projected))
}

/// Bilinear sample at continuous position `(u, v)` (pixel centers at
/// half-integers), clamping to the edge outside the domain.
#[inline]
pub fn sample_bilinear(plane: &Plane, u: f64, v: f64, c: usize) -> f32 {
    let x = (u - 0.5).clamp(0.0, (plane.width() - 1) as f64);
    let y = (v - 0.5).clamp(0.0, (plane.height() - 1) as f64);
    let i0 = x.floor() as usize;
    let j0 = y.floor() as usize;
    let i1 = (i0 + 1).min(plane.width() - 1);
    let j1 = (j0 + 1).min(plane.height() - 1);
    let fx = x - i0 as f64;
    let fy = y - j0 as f64;
    let a = plane.get(i0, j0, c) as f64;
    let b = plane.get(i1, j0, c) as f64;
    let cc = plane.get(i0, j1, c) as f64;
    let d = plane.get(i1, j1, c) as f64;
    let top = a + (b - a) * fx;
    let bottom = cc + (d - cc) * fx;
    (top + (bottom - top) * fy) as f32
}

/// Resample `plane` at `(i + 0.5 + dx, j + 0.5 + dy)` for every output pixel.
/// The output takes the disparity map's size; invalid disparities sample in
/// place.
pub fn warp(plane: &Plane, disparity: &DisparityMap) -> Plane {
    let (w, h, ch) = (disparity.width(), disparity.height(), plane.channels());
    let rows: Vec<Vec<f32>> = (0..h)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::with_capacity(w * ch);
            for i in 0..w {
                let (dx, dy) = if disparity.is_valid(i, j) { disparity.get(i, j) } else { (0.0, 0.0) };
                let u = i as f64 + 0.5 + dx as f64;
                let v = j as f64 + 0.5 + dy as f64;
                for c in 0..ch {
                    row.push(sample_bilinear(plane, u, v, c));
                }
            }
            row
        })
        .collect();
    Plane::from_vec(w, h, ch, rows.concat()).expect("row sizes match")
}

/// A pixel keeps its correspondence iff it lands strictly inside the
/// reference image, in front of the reference camera, and not behind the
/// reference view's own surface (up to `occlusion_eps`).
pub fn estimate_mask(
    disparity: &DisparityMap,
    projected_depth: &Plane,
    ref_depth: &DepthMap,
    occlusion_eps: f64,
) -> Result<MaskMap> {
    let (w, h) = (disparity.width(), disparity.height());
    projected_depth.expect_dims("projected depth", (w, h, 1))?;
    let (wr, hr) = (ref_depth.width() as f64, ref_depth.height() as f64);
    let warped = warp(ref_depth.plane(), disparity);
    Ok(MaskMap::from_fn(w, h, |i, j| {
        if !disparity.is_valid(i, j) {
            return false;
        }
        let (dx, dy) = disparity.get(i, j);
        let x = dx as f64 + i as f64 + 0.5;
        let y = dy as f64 + j as f64 + 0.5;
        let d = projected_depth.get(i, j, 0) as f64;
        let inside = 0.0 < x && x < wr && 0.0 < y && y < hr;
        inside && 0.0 < d && d < warped.get(i, j, 0) as f64 + occlusion_eps
    }))
}

/// Disparity from the target view `cam` toward `cam_ref`, gated by the mask.
pub fn disparity_and_mask(
    depth: &DepthMap,
    ref_depth: &DepthMap,
    cam: &Camera,
    cam_ref: &Camera,
    occlusion_eps: f64,
) -> Result<(DisparityMap, MaskMap)> {
    check_camera_dims("reference depth map", ref_depth.width(), ref_depth.height(), cam_ref)?;
    let (disparity, projected) = estimate_disparity(depth, cam, cam_ref)?;
    let mask = estimate_mask(&disparity, &projected, ref_depth, occlusion_eps)?;
    Ok((disparity, mask))
}
