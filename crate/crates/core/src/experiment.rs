//! Synthetic experiments: ablation runs over a rendered arc of views, and
//! the alignment measurements used to compare depth estimates.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{decode_sequence, encode_sequence, EncodedView, SequenceOptions, ViewInput};
use crate::disparity::{disparity_and_mask, estimate_disparity, occlusion_eps, warp};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::io::{CameraRecord, ManifestView, SequenceManifest};
use crate::metrics::{psnr, psnr_from_mse, squared_error};
use crate::ordering::{Norm, ViewSequence};
use crate::plane::{DepthMap, DisparityMap, MaskMap};
use crate::scene::{render_view, synthesize_scene, two_wall_scene, ArcSpec, Bbox, RenderOutput, TwoWallSpec};

/// Occlusion slack for synthesized scenes. Rendered median depth snaps to
/// Gaussian centers, so two views of one surface disagree by about a
/// Gaussian radius; this is roughly 2.5 mean radii at the working depth.
pub const SCENE_OCCLUSION_EPS_REL: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    /// No cross-view prediction for images or depths.
    Separate,
    /// Image prediction from the unwarped reference.
    Concatenation,
    WoMask,
    WoDepPred,
    /// Full method in greedy sorted order.
    Sort,
    /// Full method in a random order.
    Random,
}

impl Arm {
    pub const ALL: [Arm; 6] = [Arm::Separate, Arm::Concatenation, Arm::WoMask, Arm::WoDepPred, Arm::Sort, Arm::Random];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Separate => "separate",
            Arm::Concatenation => "concatenation",
            Arm::WoMask => "wo_mask",
            Arm::WoDepPred => "wo_dep_pred",
            Arm::Sort => "sort",
            Arm::Random => "random",
        }
    }

    pub fn options(self, q_image: f64, q_depth: f64, occlusion_eps_rel: f64) -> SequenceOptions {
        let mut o = SequenceOptions { occlusion_eps_rel, ..SequenceOptions::full(q_image, q_depth) };
        match self {
            Arm::Separate => {
                o.image_prediction = false;
                o.depth_prediction = false;
            }
            Arm::Concatenation => {
                o.use_warp = false;
                o.use_mask = false;
            }
            Arm::WoMask => o.use_mask = false,
            Arm::WoDepPred => o.depth_prediction = false,
            Arm::Sort | Arm::Random => {}
        }
        o
    }
}

impl std::str::FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown ablation arm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_gaussians: usize,
    /// Half edge of the cube the Gaussians are drawn from.
    pub bbox_half: f64,
    pub arc: ArcSpec,
    pub q_list: Vec<f64>,
    pub q_depth: f64,
    pub occlusion_eps_rel: f64,
    pub norm: Norm,
    /// Try every greedy start instead of starting at view 0.
    pub best_start: bool,
    pub arms: Vec<Arm>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_gaussians: 5000,
            bbox_half: 1.0,
            arc: ArcSpec { radius: 4.0, spacing_deg: 4.0, count: 8, focal: 140.0, width: 64, height: 64 },
            q_list: vec![0.02],
            q_depth: 0.01,
            occlusion_eps_rel: SCENE_OCCLUSION_EPS_REL,
            norm: Norm::Frobenius,
            best_start: false,
            arms: Arm::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_list.is_empty() || self.q_list.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
            return Err(Error::InvalidParameter("q list must be non-empty and positive".into()));
        }
        if !(self.q_depth.is_finite() && self.q_depth > 0.0) {
            return Err(Error::InvalidParameter(format!("q_depth must be positive, got {}", self.q_depth)));
        }
        if self.arc.count == 0 {
            return Err(Error::InvalidParameter("arc must hold at least one camera".into()));
        }
        if !(self.occlusion_eps_rel >= 0.0) {
            return Err(Error::InvalidParameter("occlusion_eps_rel must be non-negative".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::InvalidParameter("no ablation arms selected".into()));
        }
        Ok(())
    }
}

/// Rendered views in capture order. The capture order is a seeded shuffle of
/// the arc, so ordering has something to recover.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cameras: Vec<Camera>,
    pub renders: Vec<RenderOutput>,
}

impl Scenario {
    pub fn synthesize(cfg: &ExperimentConfig) -> Result<Self> {
        let (scene, mut cameras) = synthesize_scene(cfg.seed, cfg.n_gaussians, Bbox::cube(cfg.bbox_half), &cfg.arc)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_ca77);
        cameras.shuffle(&mut rng);
        let renders = cameras.par_iter().map(|c| render_view(&scene, c)).collect();
        Ok(Self { cameras, renders })
    }

    pub fn view(&self, id: usize) -> ViewInput {
        ViewInput {
            camera: self.cameras[id],
            image: self.renders[id].color.clone(),
            depth: self.renders[id].median_depth.clone(),
        }
    }

    pub fn sorted_order(&self, norm: Norm, best_start: bool) -> Result<Vec<usize>> {
        let seq = ViewSequence::new(self.cameras.iter().map(|c| c.extrinsics).collect(), norm)?;
        seq.order(if best_start { None } else { Some(0) })
    }

    pub fn random_order(&self, seed: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.cameras.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x0dd_5eed));
        order
    }
}

/// One CSV row: a view, or `all` for the aggregate over a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdRow {
    pub arm: String,
    pub view: String,
    pub q: f64,
    pub bpp_img: f64,
    pub bpp_depth: f64,
    pub psnr_img: f64,
    pub psnr_depth: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RdReport {
    pub rows: Vec<RdRow>,
}

impl RdReport {
    pub fn aggregate(&self, arm: Arm, q: f64) -> Option<&RdRow> {
        self.rows.iter().find(|r| r.arm == arm.name() && r.view == "all" && r.q == q)
    }

    /// Aggregate bits per pixel over both planes.
    pub fn total_bpp(&self, arm: Arm, q: f64) -> Option<f64> {
        self.aggregate(arm, q).map(|r| r.bpp_img + r.bpp_depth)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Total bpp per arm and its change against the sorted full method.
    pub fn summary(&self, q_list: &[f64]) -> String {
        let mut s = String::new();
        for &q in q_list {
            let _ = writeln!(s, "q = {q}");
            let base = self.total_bpp(Arm::Sort, q);
            for arm in Arm::ALL {
                let Some(bpp) = self.total_bpp(arm, q) else { continue };
                let r = self.aggregate(arm, q).expect("row exists");
                let delta = match base {
                    Some(b) if arm != Arm::Sort => format!("{:+.2}%", 100.0 * (bpp - b) / b),
                    _ => "-".into(),
                };
                let _ = writeln!(
                    s,
                    "  {:<14} bpp {:>8.4} (img {:.4}, depth {:.4})  psnr img {:6.2} dB  depth {:6.2} dB  vs sort {}",
                    arm.name(),
                    bpp,
                    r.bpp_img,
                    r.bpp_depth,
                    r.psnr_img,
                    r.psnr_depth,
                    delta
                );
            }
        }
        s
    }
}

fn max_valid(depth: &DepthMap) -> f64 {
    depth.data().iter().filter(|d| **d > 0.0).fold(0.0f64, |m, &d| m.max(d as f64))
}

/// Rows for one coded sequence. `order` maps coding position to view id.
fn rate_rows(arm: Arm, q: f64, order: &[usize], scenario: &Scenario, coded: &[EncodedView]) -> Result<Vec<RdRow>> {
    let mut rows = Vec::with_capacity(order.len() + 1);
    let (mut img_bytes, mut depth_bytes, mut pixels) = (0usize, 0usize, 0usize);
    let (mut img_sq, mut img_n, mut dep_sq, mut dep_n, mut dep_peak) = (0.0, 0usize, 0.0, 0usize, 0.0f64);
    for (&id, ev) in order.iter().zip(coded) {
        let r = &scenario.renders[id];
        let px = r.color.pixel_count();
        let (isq, in_) = squared_error(&r.color, &ev.recon_image, None)?;
        let valid = r.median_depth.validity();
        let (dsq, dn) = squared_error(r.median_depth.plane(), ev.recon_depth.plane(), Some(&valid))?;
        let peak = max_valid(&r.median_depth);
        let depth_psnr = if dn == 0 { crate::metrics::PSNR_CAP } else { psnr_from_mse(dsq / dn as f64, peak) };
        rows.push(RdRow {
            arm: arm.name().into(),
            view: id.to_string(),
            q,
            bpp_img: 8.0 * ev.image.len() as f64 / px as f64,
            bpp_depth: 8.0 * ev.depth.len() as f64 / px as f64,
            psnr_img: psnr_from_mse(isq / in_ as f64, 1.0),
            psnr_depth: depth_psnr,
        });
        img_bytes += ev.image.len();
        depth_bytes += ev.depth.len();
        pixels += px;
        img_sq += isq;
        img_n += in_;
        dep_sq += dsq;
        dep_n += dn;
        dep_peak = dep_peak.max(peak);
    }
    rows.push(RdRow {
        arm: arm.name().into(),
        view: "all".into(),
        q,
        bpp_img: 8.0 * img_bytes as f64 / pixels as f64,
        bpp_depth: 8.0 * depth_bytes as f64 / pixels as f64,
        psnr_img: psnr_from_mse(img_sq / img_n as f64, 1.0),
        psnr_depth: if dep_n == 0 { crate::metrics::PSNR_CAP } else { psnr_from_mse(dep_sq / dep_n as f64, dep_peak) },
    });
    Ok(rows)
}

fn write_streams(dir: &Path, order: &[usize], scenario: &Scenario, coded: &[EncodedView], eps_rel: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = SequenceManifest::new(eps_rel);
    for (&id, ev) in order.iter().zip(coded) {
        let image = format!("view{id:03}_image.mvgc");
        let depth = format!("view{id:03}_depth.mvgc");
        ev.image.save(&dir.join(&image))?;
        ev.depth.save(&dir.join(&depth))?;
        manifest.views.push(ManifestView {
            id,
            camera: CameraRecord::from_camera(&scenario.cameras[id]),
            image,
            depth,
        });
    }
    manifest.save(&dir.join("manifest.json"))
}

/// Code the scenario under every configured arm and quantizer step. Every
/// sequence is decoded again and must match the encoder's reconstructions
/// bit for bit. Streams and manifests go to `out_dir/<arm>/q<k>/` when given.
pub fn run_ablation(cfg: &ExperimentConfig, scenario: &Scenario, out_dir: Option<&Path>) -> Result<RdReport> {
    cfg.validate()?;
    let sorted = scenario.sorted_order(cfg.norm, cfg.best_start)?;
    let random = scenario.random_order(cfg.seed);
    let mut report = RdReport::default();
    for &arm in &cfg.arms {
        let order = if arm == Arm::Random { &random } else { &sorted };
        let views: Vec<ViewInput> = order.iter().map(|&id| scenario.view(id)).collect();
        let cameras: Vec<Camera> = views.iter().map(|v| v.camera).collect();
        for (k, &q) in cfg.q_list.iter().enumerate() {
            let opts = arm.options(q, cfg.q_depth, cfg.occlusion_eps_rel);
            let coded = encode_sequence(&views, &opts)?;
            let streams: Vec<_> = coded.iter().map(|c| (c.image.clone(), c.depth.clone())).collect();
            let decoded = decode_sequence(&cameras, &streams, cfg.occlusion_eps_rel)?;
            for (n, ((img, dep), ev)) in decoded.iter().zip(&coded).enumerate() {
                if img != &ev.recon_image || dep != &ev.recon_depth {
                    return Err(Error::Decode(format!(
                        "arm {} q {q}: decoder drifted from the encoder at coding position {n}",
                        arm.name()
                    )));
                }
            }
            report.rows.extend(rate_rows(arm, q, order, scenario, &coded)?);
            if let Some(dir) = out_dir {
                write_streams(
                    &dir.join(arm.name()).join(format!("q{k}")),
                    order,
                    scenario,
                    &coded,
                    cfg.occlusion_eps_rel,
                )?;
            }
        }
    }
    Ok(report)
}

/// Masked-region PSNR against the target image of the warped reference and
/// of the unwarped reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub warped_psnr: f64,
    pub unwarped_psnr: f64,
    /// Fraction of valid target pixels kept by the mask.
    pub overlap: f64,
}

impl Alignment {
    pub fn gain(&self) -> f64 {
        self.warped_psnr - self.unwarped_psnr
    }
}

pub fn alignment(
    target: &RenderOutput,
    reference: &RenderOutput,
    cam: &Camera,
    cam_ref: &Camera,
    eps_rel: f64,
) -> Result<Alignment> {
    let eps = occlusion_eps(&reference.median_depth, eps_rel);
    let (disparity, mask) = disparity_and_mask(&target.median_depth, &reference.median_depth, cam, cam_ref, eps)?;
    let valid = target.median_depth.valid_count();
    if mask.count() == 0 {
        return Err(Error::InvalidParameter("views share no unoccluded pixels".into()));
    }
    let warped = warp(&reference.color, &disparity);
    Ok(Alignment {
        warped_psnr: psnr(&warped, &target.color, 1.0, Some(&mask))?,
        unwarped_psnr: psnr(&reference.color, &target.color, 1.0, Some(&mask))?,
        overlap: mask.count() as f64 / valid.max(1) as f64,
    })
}

/// Alignment PSNR of the reference image warped with disparities from the
/// target's median depth and from its weighted-average depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthComparison {
    pub median_psnr: f64,
    pub weighted_psnr: f64,
    pub pixels: usize,
}

/// Both disparities are scored on the same pixels: covered in the target
/// and landing inside the reference image under either depth.
pub fn median_vs_weighted(seed: u64, spec: &TwoWallSpec) -> Result<DepthComparison> {
    let (scene, cam, cam_ref) = two_wall_scene(seed, spec)?;
    let target = render_view(&scene, &cam);
    let reference = render_view(&scene, &cam_ref);
    let (dm, _) = estimate_disparity(&target.median_depth, &cam, &cam_ref)?;
    let (dw, _) = estimate_disparity(&target.weighted_depth, &cam, &cam_ref)?;
    let (w, h) = (cam_ref.width() as f64, cam_ref.height() as f64);
    let inside = |d: &DisparityMap, i: usize, j: usize| {
        d.is_valid(i, j) && {
            let (dx, dy) = d.get(i, j);
            let x = i as f64 + 0.5 + dx as f64;
            let y = j as f64 + 0.5 + dy as f64;
            0.0 < x && x < w && 0.0 < y && y < h
        }
    };
    let region = MaskMap::from_fn(cam.width(), cam.height(), |i, j| {
        target.coverage.get(i, j) && inside(&dm, i, j) && inside(&dw, i, j)
    });
    if region.count() == 0 {
        return Err(Error::InvalidParameter("no pixels to compare".into()));
    }
    let score = |d| -> Result<f64> { psnr(&warp(&reference.color, d), &target.color, 1.0, Some(&region)) };
    Ok(DepthComparison { median_psnr: score(&dm)?, weighted_psnr: score(&dw)?, pixels: region.count() })
}
