//! Cross-view depth prediction: forward-splat a reference depth map into the
//! target view, keeping the nearest depth per cell.

use nalgebra::Point2;

use crate::error::{Error, Result};
use crate::geometry::{backproject, project, Camera};
use crate::plane::{DepthMap, MaskMap};

/// `⌊x − 0.5⌉` with ties rounded away from zero, or `None` outside `[0, n)`.
#[inline]
pub fn splat_cell(x: f64, n: usize) -> Option<usize> {
    let cell = (x - 0.5).round();
    (cell >= 0.0 && cell < n as f64).then_some(cell as usize)
}

/// Predicted target depth `d_p` and its hit mask `d_m`. Cells that receive no
/// reference pixel hold depth 0 and mask 0.
pub fn cvdp(ref_depth: &DepthMap, cam_ref: &Camera, cam: &Camera) -> Result<(DepthMap, MaskMap)> {
    if (ref_depth.width(), ref_depth.height()) != (cam_ref.width(), cam_ref.height()) {
        return Err(Error::DimensionMismatch {
            what: "reference depth map",
            got: (ref_depth.width(), ref_depth.height(), 1),
            expected: (cam_ref.width(), cam_ref.height(), 1),
        });
    }
    let (w, h) = (cam.width(), cam.height());
    let mut best = vec![f32::INFINITY; w * h];
    for j in 0..ref_depth.height() {
        for i in 0..ref_depth.width() {
            if let Some((cell, d)) = splat_one(ref_depth, cam_ref, cam, i, j) {
                if d < best[cell] {
                    best[cell] = d;
                }
            }
        }
    }
    let mask = MaskMap::from_vec(w, h, best.iter().map(|d| d.is_finite()).collect())?;
    let depth = DepthMap::from_vec(w, h, best.into_iter().map(|d| if d.is_finite() { d } else { 0.0 }).collect())?;
    Ok((depth, mask))
}

/// Target cell index and depth for reference pixel `(i, j)`, if it lands.
fn splat_one(ref_depth: &DepthMap, cam_ref: &Camera, cam: &Camera, i: usize, j: usize) -> Option<(usize, f32)> {
    if !ref_depth.is_valid(i, j) {
        return None;
    }
    let center = Point2::new(i as f64 + 0.5, j as f64 + 0.5);
    let world = backproject(center, ref_depth.get(i, j) as f64, &cam_ref.intrinsics, &cam_ref.extrinsics).ok()?;
    let (px, d) = project(&world, &cam.intrinsics, &cam.extrinsics).ok()?;
    let d = d as f32;
    if !(d > 0.0) {
        return None;
    }
    let ci = splat_cell(px.x, cam.width())?;
    let cj = splat_cell(px.y, cam.height())?;
    Some((cj * cam.width() + ci, d))
}
