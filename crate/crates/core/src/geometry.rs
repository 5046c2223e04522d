//! Pinhole camera models and the back-projection / projection pair used by
//! disparity estimation and cross-view depth prediction.
//!
//! Conventions:
//! - extrinsics map world to camera coordinates, `q = R p + t`;
//! - pixel coordinates are continuous and pixel index `(i, j)` has its
//!   center at `(i + 0.5, j + 0.5)`;
//! - all geometry is computed in `f64`.

use nalgebra::{Matrix3, Matrix4, Point2, Point3, Vector3, Vector4};

use crate::error::{Error, Result};

/// Tolerance on `RᵀR = I` and `det(R) = 1` accepted by [`Extrinsics::new`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    /// Square pixels with the principal point at the image center.
    pub fn centered(focal: f64, width: usize, height: usize) -> Result<Self> {
        Self::new(focal, focal, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fx > 0.0 && self.fy.is_finite() && self.fy > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidCamera("principal point must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera(format!(
                "image size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// `K⁻¹ · d · (x, y, 1)ᵀ` in closed form.
    pub fn unproject(&self, px: Point2<f64>, depth: f64) -> Vector3<f64> {
        Vector3::new((px.x - self.cx) * depth / self.fx, (px.y - self.cy) * depth / self.fy, depth)
    }

    /// `(K q).xy / q.z`; the caller guarantees `q.z != 0`.
    pub fn project(&self, q: &Vector3<f64>) -> Point2<f64> {
        Point2::new((self.fx * q.x + self.cx * q.z) / q.z, (self.fy * q.y + self.cy * q.z) / q.z)
    }

    pub fn contains(&self, px: Point2<f64>) -> bool {
        px.x > 0.0 && px.x < self.width as f64 && px.y > 0.0 && px.y < self.height as f64
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Rigid world→camera transform `V = [[R, t], [0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Extrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera("extrinsics must be finite".into()));
        }
        let gram_err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if gram_err > ROTATION_TOLERANCE {
            return Err(Error::InvalidCamera(format!("rotation is not orthonormal (max |RᵀR - I| = {gram_err:e})")));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(Error::InvalidCamera(format!("rotation determinant is {det}, expected 1")));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self { rotation: Matrix3::identity(), translation: t }
    }

    /// Camera at `eye` looking at `target`; image `y` points along `-up`.
    pub fn look_at(eye: Point3<f64>, target: Point3<f64>, up: Vector3<f64>) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() == 0.0 {
            return Err(Error::InvalidCamera("look_at eye and target coincide".into()));
        }
        let z = forward.normalize();
        let x = z.cross(&up);
        if x.norm() < 1e-12 {
            return Err(Error::InvalidCamera("look_at up vector is parallel to view direction".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let rotation = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let translation = -(rotation * eye.coords);
        Self::new(rotation, translation)
    }

    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = m.fixed_view::<1, 4>(3, 0);
        if bottom[(0, 0)] != 0.0 || bottom[(0, 1)] != 0.0 || bottom[(0, 2)] != 0.0 || bottom[(0, 3)] != 1.0 {
            return Err(Error::InvalidCamera("bottom row of V must be (0, 0, 0, 1)".into()));
        }
        Self::new(m.fixed_view::<3, 3>(0, 0).into_owned(), m.fixed_view::<3, 1>(0, 3).into_owned())
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// `V⁻¹ = [[Rᵀ, -Rᵀt], [0, 1]]`.
    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    pub fn world_to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation * p.coords + self.translation
    }

    pub fn camera_to_world(&self, q: &Vector3<f64>) -> Point3<f64> {
        let inv = self.inverse();
        Point3::from(inv.rotation * q + inv.translation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    pub extrinsics: Extrinsics,
}

impl Camera {
    pub fn new(intrinsics: Intrinsics, extrinsics: Extrinsics) -> Self {
        Self { intrinsics, extrinsics }
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }
}

pub fn aug(v: &Vector3<f64>) -> Vector4<f64> {
    v.push(1.0)
}

pub fn deaug(v: &Vector4<f64>) -> Vector3<f64> {
    v.xyz()
}

/// Lift pixel `px` at depth `d` into world space:
/// `deaug(V⁻¹ · aug(K⁻¹ · d · (x, y, 1)ᵀ))`.
pub fn backproject(px: Point2<f64>, depth: f64, k: &Intrinsics, v: &Extrinsics) -> Result<Point3<f64>> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::NonPositiveDepth(depth));
    }
    Ok(v.camera_to_world(&k.unproject(px, depth)))
}

/// Project a world point, returning the pixel position and its camera-space depth.
pub fn project(p: &Point3<f64>, k: &Intrinsics, v: &Extrinsics) -> Result<(Point2<f64>, f64)> {
    let q = v.world_to_camera(p);
    if q.z == 0.0 {
        return Err(Error::ProjectionAtInfinity);
    }
    Ok((k.project(&q), q.z))
}
