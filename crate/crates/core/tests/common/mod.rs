//! Scalar reference implementations and random fixtures shared by the
//! integration tests.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvgeo_core::geometry::{Camera, Extrinsics, Intrinsics};
use mvgeo_core::plane::DepthMap;

/// Plain-array copy of a camera.
#[derive(Clone, Copy)]
pub struct ScalarCam {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub w: usize,
    pub h: usize,
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
}

impl ScalarCam {
    pub fn of(cam: &Camera) -> Self {
        let k = &cam.intrinsics;
        let rot = cam.extrinsics.rotation();
        let tr = cam.extrinsics.translation();
        let mut r = [[0.0; 3]; 3];
        for (a, row) in r.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = rot[(a, b)];
            }
        }
        Self { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, w: k.width, h: k.height, r, t: [tr.x, tr.y, tr.z] }
    }

    /// Pixel center at depth `d` to world coordinates.
    pub fn lift(&self, x: f64, y: f64, d: f64) -> [f64; 3] {
        let q = [(x - self.cx) * d / self.fx, (y - self.cy) * d / self.fy, d];
        // inverse rotation is the transpose; inverse translation is -(Rᵀ t)
        let mut neg_t = [0.0; 3];
        for (a, v) in neg_t.iter_mut().enumerate() {
            let s = self.r[0][a] * self.t[0] + self.r[1][a] * self.t[1] + self.r[2][a] * self.t[2];
            *v = -s;
        }
        let mut p = [0.0; 3];
        for (a, v) in p.iter_mut().enumerate() {
            *v = self.r[0][a] * q[0] + self.r[1][a] * q[1] + self.r[2][a] * q[2] + neg_t[a];
        }
        p
    }

    /// World point to `(x, y, depth)`, or `None` at zero depth.
    pub fn view(&self, p: [f64; 3]) -> Option<(f64, f64, f64)> {
        let mut q = [0.0; 3];
        for (a, v) in q.iter_mut().enumerate() {
            *v = self.r[a][0] * p[0] + self.r[a][1] * p[1] + self.r[a][2] * p[2] + self.t[a];
        }
        if q[2] == 0.0 {
            return None;
        }
        Some(((self.fx * q[0] + self.cx * q[2]) / q[2], (self.fy * q[1] + self.cy * q[2]) / q[2], q[2]))
    }
}

/// Bilinear sample with edge clamp, pixel centers at half-integers.
pub fn bilinear(data: &[f32], w: usize, h: usize, u: f64, v: f64) -> f32 {
    let mut x = u - 0.5;
    let mut y = v - 0.5;
    if x < 0.0 {
        x = 0.0;
    }
    if x > (w - 1) as f64 {
        x = (w - 1) as f64;
    }
    if y < 0.0 {
        y = 0.0;
    }
    if y > (h - 1) as f64 {
        y = (h - 1) as f64;
    }
    let i0 = x.floor() as usize;
    let j0 = y.floor() as usize;
    let i1 = if i0 + 1 < w { i0 + 1 } else { w - 1 };
    let j1 = if j0 + 1 < h { j0 + 1 } else { h - 1 };
    let fx = x - i0 as f64;
    let fy = y - j0 as f64;
    let a = data[j0 * w + i0] as f64;
    let b = data[j0 * w + i1] as f64;
    let c = data[j1 * w + i0] as f64;
    let d = data[j1 * w + i1] as f64;
    let top = a + (b - a) * fx;
    let bottom = c + (d - c) * fx;
    (top + (bottom - top) * fy) as f32
}

/// Per-pixel disparity (NaN when invalid) and the occlusion mask, one
/// pixel at a time.
pub fn disparity_mask_oracle(
    depth: &[f32],
    ref_depth: &[f32],
    cam: &ScalarCam,
    cam_ref: &ScalarCam,
    eps: f64,
) -> (Vec<(f32, f32)>, Vec<bool>) {
    let (w, h) = (cam.w, cam.h);
    let mut disp = vec![(f32::NAN, f32::NAN); w * h];
    let mut mask = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            let k = j * w + i;
            let d = depth[k];
            if !(d > 0.0 && d.is_finite()) {
                continue;
            }
            let (cx, cy) = (i as f64 + 0.5, j as f64 + 0.5);
            let p = cam.lift(cx, cy, d as f64);
            let Some((x, y, dp)) = cam_ref.view(p) else { continue };
            let dx = (x - cx) as f32;
            let dy = (y - cy) as f32;
            disp[k] = (dx, dy);
            let dp = dp as f32 as f64;

            let xr = dx as f64 + i as f64 + 0.5;
            let yr = dy as f64 + j as f64 + 0.5;
            let inside = xr > 0.0 && xr < cam_ref.w as f64 && yr > 0.0 && yr < cam_ref.h as f64;
            let warped =
                bilinear(ref_depth, cam_ref.w, cam_ref.h, i as f64 + 0.5 + dx as f64, j as f64 + 0.5 + dy as f64);
            mask[k] = inside && dp > 0.0 && dp < warped as f64 + eps;
        }
    }
    (disp, mask)
}

/// Every (source pixel, target cell, depth) triple the splat produces.
pub fn cvdp_candidates(ref_depth: &[f32], cam_ref: &ScalarCam, cam: &ScalarCam) -> Vec<(usize, f32)> {
    let mut out = Vec::new();
    for j in 0..cam_ref.h {
        for i in 0..cam_ref.w {
            let d = ref_depth[j * cam_ref.w + i];
            if !(d > 0.0 && d.is_finite()) {
                continue;
            }
            let p = cam_ref.lift(i as f64 + 0.5, j as f64 + 0.5, d as f64);
            let Some((x, y, dp)) = cam.view(p) else { continue };
            let dp = dp as f32;
            if !(dp > 0.0) {
                continue;
            }
            let ci = (x - 0.5).round();
            let cj = (y - 0.5).round();
            if ci < 0.0 || cj < 0.0 || ci >= cam.w as f64 || cj >= cam.h as f64 {
                continue;
            }
            out.push((cj as usize * cam.w + ci as usize, dp));
        }
    }
    out
}

/// Per-cell minimum over `candidates` in the given order.
pub fn cvdp_oracle(candidates: &[(usize, f32)], cells: usize) -> (Vec<f32>, Vec<bool>) {
    let mut depth = vec![0.0f32; cells];
    let mut hit = vec![false; cells];
    for &(cell, d) in candidates {
        if !hit[cell] || d < depth[cell] {
            depth[cell] = d;
            hit[cell] = true;
        }
    }
    (depth, hit)
}

pub fn random_extrinsics(rng: &mut ChaCha8Rng, angle: f64, shift: f64) -> Extrinsics {
    let rot = Rotation3::from_euler_angles(
        rng.gen_range(-angle..=angle),
        rng.gen_range(-angle..=angle),
        rng.gen_range(-angle..=angle),
    );
    let t = Vector3::new(rng.gen_range(-shift..=shift), rng.gen_range(-shift..=shift), rng.gen_range(-shift..=shift));
    Extrinsics::new(*rot.matrix(), t).expect("rotation from euler angles is orthonormal")
}

/// Arbitrary rigid transform with a full range of rotations.
pub fn random_se3(rng: &mut ChaCha8Rng) -> Extrinsics {
    let axis = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    let rot = Rotation3::from_scaled_axis(axis.normalize() * angle);
    let t = Vector3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    Extrinsics::new(*rot.matrix(), t).expect("valid rotation")
}

/// A random 8×8 two-view instance: cameras near each other, depths in
/// `[2, 4]` with holes.
pub struct PairInstance {
    pub cam: Camera,
    pub cam_ref: Camera,
    pub depth: DepthMap,
    pub ref_depth: DepthMap,
}

pub fn random_pair(seed: u64) -> PairInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = || {
        let f = rng.gen_range(6.0..12.0);
        Intrinsics::new(
            f,
            f * rng.gen_range(0.9..1.1),
            4.0 + rng.gen_range(-0.5..0.5),
            4.0 + rng.gen_range(-0.5..0.5),
            8,
            8,
        )
        .expect("valid intrinsics")
    };
    let (k1, k2) = (k(), k());
    let cam = Camera::new(k1, random_extrinsics(&mut rng, 0.1, 0.3));
    let cam_ref = Camera::new(k2, random_extrinsics(&mut rng, 0.1, 0.3));
    let mut depth = || {
        let data = (0..64).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(2.0f32..4.0) }).collect();
        DepthMap::from_vec(8, 8, data).expect("8x8")
    };
    let (depth, ref_depth) = (depth(), depth());
    PairInstance { cam, cam_ref, depth, ref_depth }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
