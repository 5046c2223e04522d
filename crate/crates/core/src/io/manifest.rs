//! Sequence manifest: cameras and stream files in coding order. Stream paths
//! are relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::Bitstream;
use crate::error::Result;
use crate::geometry::Camera;
use crate::io::camera_json::CameraRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestView {
    /// Id of the view in the original (unordered) capture.
    pub id: usize,
    pub camera: CameraRecord,
    pub image: String,
    pub depth: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub version: u32,
    pub occlusion_eps_rel: f64,
    pub views: Vec<ManifestView>,
}

impl SequenceManifest {
    pub fn new(occlusion_eps_rel: f64) -> Self {
        Self { version: 1, occlusion_eps_rel, views: Vec::new() }
    }

    pub fn cameras(&self) -> Result<Vec<Camera>> {
        self.views.iter().map(|v| v.camera.to_camera()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Load every `(image, depth)` stream pair in coding order.
    pub fn load_streams(&self, manifest_path: &Path) -> Result<Vec<(Bitstream, Bitstream)>> {
        let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        self.views
            .iter()
            .map(|v| Ok((Bitstream::load(&dir.join(&v.image))?, Bitstream::load(&dir.join(&v.depth))?)))
            .collect()
    }
}
