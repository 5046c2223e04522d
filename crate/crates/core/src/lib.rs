//! Multi-view geometric prediction: camera geometry, Gaussian depth
//! rendering, disparity and occlusion masks, cross-view depth prediction,
//! view ordering, and a closed-loop predictive codec.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod cvdp;
pub mod disparity;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod ordering;
pub mod plane;
pub mod scene;

pub use error::{Error, Result};
