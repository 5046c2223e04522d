//! Camera calibration JSON: an array of
//! `{"fx","fy","cx","cy","width","height","R":[9, row-major],"t":[3]}`.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Camera, Extrinsics, Intrinsics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
}

impl CameraRecord {
    pub fn from_camera(cam: &Camera) -> Self {
        let k = &cam.intrinsics;
        let rot = cam.extrinsics.rotation();
        let t = cam.extrinsics.translation();
        let mut r = [0.0; 9];
        for row in 0..3 {
            for col in 0..3 {
                r[row * 3 + col] = rot[(row, col)];
            }
        }
        Self { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, width: k.width, height: k.height, r, t: [t.x, t.y, t.z] }
    }

    pub fn to_camera(&self) -> Result<Camera> {
        let k = Intrinsics::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)?;
        let v = Extrinsics::new(Matrix3::from_row_slice(&self.r), Vector3::from(self.t))?;
        Ok(Camera::new(k, v))
    }
}

pub fn cameras_to_json(cameras: &[Camera]) -> Result<String> {
    let records: Vec<CameraRecord> = cameras.iter().map(CameraRecord::from_camera).collect();
    Ok(serde_json::to_string_pretty(&records)?)
}

pub fn cameras_from_json(s: &str) -> Result<Vec<Camera>> {
    let records: Vec<CameraRecord> = serde_json::from_str(s)?;
    records
        .iter()
        .enumerate()
        .map(|(n, r)| r.to_camera().map_err(|e| Error::InvalidCamera(format!("camera {n}: {e}"))))
        .collect()
}

pub fn save_cameras(path: &Path, cameras: &[Camera]) -> Result<()> {
    fs::write(path, cameras_to_json(cameras)?)?;
    Ok(())
}

pub fn load_cameras(path: &Path) -> Result<Vec<Camera>> {
    cameras_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    #[test]
    fn round_trip() {
        let k = Intrinsics::new(100.0, 90.0, 32.0, 30.0, 64, 60).unwrap();
        let v = Extrinsics::look_at(Point3::new(1.0, 0.5, -3.0), Point3::origin(), Vector3::y()).unwrap();
        let cams = vec![Camera::new(k, Extrinsics::identity()), Camera::new(k, v)];
        let back = cameras_from_json(&cameras_to_json(&cams).unwrap()).unwrap();
        assert_eq!(back, cams);
    }

    #[test]
    fn names_the_bad_camera() {
        let s = r#"[{"fx":1,"fy":1,"cx":0,"cy":0,"width":4,"height":4,"R":[1,0,0,0,1,0,0,0,1],"t":[0,0,0]},
                    {"fx":1,"fy":1,"cx":0,"cy":0,"width":4,"height":4,"R":[2,0,0,0,1,0,0,0,1],"t":[0,0,0]}]"#;
        let err = cameras_from_json(s).unwrap_err().to_string();
        assert!(err.contains("camera 1"), "{err}");
    }
}
