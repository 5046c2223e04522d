//! Closed-loop coding of an ordered multi-view sequence.
//!
//! View 1 is coded intra. For every later view the depth is predicted by
//! splatting the previous reconstructed depth, and the image is predicted by
//! warping the previous reconstructed image with the disparity computed from
//! the two reconstructed depths.

use crate::codec::bitstream::{Bitstream, FLAG_MASK_CONTEXT, FLAG_NO_WARP, FLAG_PREDICTED};
use crate::codec::plane_codec::{
    decode_depth, decode_image, encode_depth, encode_image, DepthReference, ImageReference,
};
use crate::cvdp::cvdp;
use crate::disparity::{disparity_and_mask, occlusion_eps, OCCLUSION_EPS_REL};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::plane::{DepthMap, DisparityMap, MaskMap, Plane};

#[derive(Debug, Clone)]
pub struct ViewInput {
    pub camera: Camera,
    pub image: Plane,
    pub depth: DepthMap,
}

/// Which cross-view tools the encoder uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceOptions {
    pub q_image: f64,
    pub q_depth: f64,
    pub image_prediction: bool,
    pub depth_prediction: bool,
    /// Gate the image prediction with the occlusion mask.
    pub use_mask: bool,
    /// Warp the reference image; when false it predicts unaligned.
    pub use_warp: bool,
    pub occlusion_eps_rel: f64,
}

impl SequenceOptions {
    pub fn full(q_image: f64, q_depth: f64) -> Self {
        Self {
            q_image,
            q_depth,
            image_prediction: true,
            depth_prediction: true,
            use_mask: true,
            use_warp: true,
            occlusion_eps_rel: OCCLUSION_EPS_REL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EncodedView {
    pub image: Bitstream,
    pub depth: Bitstream,
    pub recon_image: Plane,
    pub recon_depth: DepthMap,
}

struct ImageTools {
    disparity: Option<DisparityMap>,
    mask: Option<MaskMap>,
}

/// Disparity and mask from the reconstructed depths, as far as the tools
/// in use need them.
fn image_tools(
    depth: &DepthMap,
    prev_depth: &DepthMap,
    cam: &Camera,
    prev_cam: &Camera,
    use_warp: bool,
    use_mask: bool,
    eps_rel: f64,
) -> Result<ImageTools> {
    if !use_warp && !use_mask {
        return Ok(ImageTools { disparity: None, mask: None });
    }
    let eps = occlusion_eps(prev_depth, eps_rel);
    let (disparity, mask) = disparity_and_mask(depth, prev_depth, cam, prev_cam, eps)?;
    Ok(ImageTools { disparity: use_warp.then_some(disparity), mask: use_mask.then_some(mask) })
}

pub fn encode_sequence(views: &[ViewInput], opts: &SequenceOptions) -> Result<Vec<EncodedView>> {
    let mut out: Vec<EncodedView> = Vec::with_capacity(views.len());
    for (n, view) in views.iter().enumerate() {
        let (w, h) = (view.camera.width(), view.camera.height());
        view.image.expect_dims("view image", (w, h, view.image.channels()))?;
        if (view.depth.width(), view.depth.height()) != (w, h) {
            return Err(Error::DimensionMismatch {
                what: "view depth",
                got: (view.depth.width(), view.depth.height(), 1),
                expected: (w, h, 1),
            });
        }
        let prev = n.checked_sub(1).map(|p| (&views[p].camera, &out[p]));

        let depth_pred = match prev {
            Some((prev_cam, prev_out)) if opts.depth_prediction => {
                Some(cvdp(&prev_out.recon_depth, prev_cam, &view.camera)?)
            }
            _ => None,
        };
        let depth_ref = depth_pred.as_ref().map(|(depth, hits)| DepthReference { depth, hits });
        let (depth_bs, recon_depth) = encode_depth(&view.depth, depth_ref.as_ref(), opts.q_depth)?;

        let tools = match prev {
            Some((prev_cam, prev_out)) if opts.image_prediction => Some(image_tools(
                &recon_depth,
                &prev_out.recon_depth,
                &view.camera,
                prev_cam,
                opts.use_warp,
                opts.use_mask,
                opts.occlusion_eps_rel,
            )?),
            _ => None,
        };
        let image_ref = tools.as_ref().zip(prev).map(|(t, (_, prev_out))| ImageReference {
            image: &prev_out.recon_image,
            disparity: t.disparity.as_ref(),
            mask: t.mask.as_ref(),
        });
        let (image_bs, recon_image) = encode_image(&view.image, image_ref.as_ref(), opts.q_image)?;

        out.push(EncodedView { image: image_bs, depth: depth_bs, recon_image, recon_depth });
    }
    Ok(out)
}

/// Decode a sequence coded by [`encode_sequence`]. The prediction tools are
/// read from each stream's flags; only the occlusion slack is external.
pub fn decode_sequence(
    cameras: &[Camera],
    streams: &[(Bitstream, Bitstream)],
    occlusion_eps_rel: f64,
) -> Result<Vec<(Plane, DepthMap)>> {
    if cameras.len() != streams.len() {
        return Err(Error::InvalidParameter(format!("{} cameras for {} coded views", cameras.len(), streams.len())));
    }
    let mut out: Vec<(Plane, DepthMap)> = Vec::with_capacity(streams.len());
    for (n, (image_bs, depth_bs)) in streams.iter().enumerate() {
        let cam = &cameras[n];
        let prev = n.checked_sub(1).map(|p| (&cameras[p], &out[p]));
        if prev.is_none() && (image_bs.header.has(FLAG_PREDICTED) || depth_bs.header.has(FLAG_PREDICTED)) {
            return Err(Error::Decode("first view of a sequence cannot be predicted".into()));
        }

        let depth_pred = match prev {
            Some((prev_cam, (_, prev_depth))) if depth_bs.header.has(FLAG_PREDICTED) => {
                Some(cvdp(prev_depth, prev_cam, cam)?)
            }
            _ => None,
        };
        let depth_ref = depth_pred.as_ref().map(|(depth, hits)| DepthReference { depth, hits });
        let depth = decode_depth(depth_bs, depth_ref.as_ref())?;

        let h = &image_bs.header;
        let tools = match prev {
            Some((prev_cam, (_, prev_depth))) if h.has(FLAG_PREDICTED) => Some(image_tools(
                &depth,
                prev_depth,
                cam,
                prev_cam,
                !h.has(FLAG_NO_WARP),
                h.has(FLAG_MASK_CONTEXT),
                occlusion_eps_rel,
            )?),
            _ => None,
        };
        let image_ref = tools.as_ref().zip(prev).map(|(t, (_, (prev_image, _)))| ImageReference {
            image: prev_image,
            disparity: t.disparity.as_ref(),
            mask: t.mask.as_ref(),
        });
        let image = decode_image(image_bs, image_ref.as_ref())?;
        out.push((image, depth));
    }
    Ok(out)
}
