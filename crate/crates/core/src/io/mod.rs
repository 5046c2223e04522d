pub mod camera_json;
pub mod manifest;
pub mod mvfd;
pub mod ppm;

pub use camera_json::{cameras_from_json, cameras_to_json, load_cameras, save_cameras, CameraRecord};
pub use manifest::{ManifestView, SequenceManifest};
pub use mvfd::{read_mvfd, write_mvfd, PlaneKind};
pub use ppm::{read_ppm, write_ppm};
