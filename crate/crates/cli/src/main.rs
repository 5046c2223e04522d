#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mvgeo_core::codec::{decode_sequence, encode_sequence, SequenceOptions, ViewInput};
use mvgeo_core::cvdp::cvdp;
use mvgeo_core::disparity::{estimate_disparity, estimate_mask, occlusion_eps, warp, OCCLUSION_EPS_REL};
use mvgeo_core::experiment::{run_ablation, Arm, ExperimentConfig, Scenario};
use mvgeo_core::geometry::Camera;
use mvgeo_core::io::{
    load_cameras, read_mvfd, read_ppm, save_cameras, write_mvfd, write_ppm, CameraRecord, ManifestView, PlaneKind,
    SequenceManifest,
};
use mvgeo_core::metrics::{mse, psnr_from_mse};
use mvgeo_core::ordering::{Norm, ViewSequence};
use mvgeo_core::plane::{DepthMap, DisparityMap, MaskMap, Plane};
use mvgeo_core::scene::{render_view, synthesize_scene, ArcSpec, Bbox, GaussianScene};

#[derive(Parser)]
#[command(name = "mvgeo", version, about = "Multi-view geometric prediction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random Gaussian scene and an arc of cameras around it.
    Synth(SynthArgs),
    /// Render color, median depth, weighted depth and coverage per camera.
    Render(RenderArgs),
    /// Disparity from one view toward a reference view.
    Disparity(PairArgs),
    /// Validity and occlusion mask of the disparity toward a reference view.
    Mask(MaskArgs),
    /// Splat a reference depth map into a target view.
    Cvdp(CvdpArgs),
    /// Greedy view ordering by inter-view distance.
    Order(OrderArgs),
    /// Code a rendered sequence into per-plane streams and a manifest.
    Encode(EncodeArgs),
    /// Decode a sequence from its manifest.
    Decode(DecodeArgs),
    /// MSE and PSNR between two planes.
    Eval(EvalArgs),
    /// Run the ablation arms on a synthesized scene.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    /// Half edge of the cube holding the Gaussians.
    #[arg(long, default_value_t = 1.0)]
    half: f64,
    #[arg(long, default_value_t = 8)]
    count: usize,
    /// Degrees between consecutive cameras.
    #[arg(long, default_value_t = 4.0)]
    spacing: f64,
    #[arg(long, default_value_t = 4.0)]
    radius: f64,
    #[arg(long, default_value_t = 140.0)]
    focal: f64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    cameras: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PairArgs {
    /// Depth map of the target view (MVFD).
    #[arg(long)]
    depth: PathBuf,
    #[arg(long)]
    cameras: PathBuf,
    /// Target view index in the camera file.
    #[arg(long)]
    view: usize,
    /// Reference view index in the camera file.
    #[arg(long = "ref")]
    reference: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the depth of each point in the reference camera.
    #[arg(long)]
    projected: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Depth map of the reference view (MVFD).
    #[arg(long)]
    ref_depth: PathBuf,
    /// Occlusion slack relative to the mean reference depth.
    #[arg(long, default_value_t = OCCLUSION_EPS_REL)]
    eps_rel: f64,
    /// Absolute occlusion slack; overrides --eps-rel.
    #[arg(long)]
    eps: Option<f64>,
    /// Also write the reference image warped into the target view.
    #[arg(long, requires = "warped_out")]
    ref_image: Option<PathBuf>,
    #[arg(long)]
    warped_out: Option<PathBuf>,
}

#[derive(Args)]
struct CvdpArgs {
    #[arg(long)]
    ref_depth: PathBuf,
    #[arg(long)]
    cameras: PathBuf,
    #[arg(long)]
    view: usize,
    #[arg(long = "ref")]
    reference: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    hits_out: Option<PathBuf>,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long)]
    cameras: PathBuf,
    #[arg(long, default_value = "frobenius")]
    norm: Norm,
    #[arg(long, default_value_t = 0, conflicts_with = "best_start")]
    start: usize,
    /// Try every start and keep the shortest path.
    #[arg(long)]
    best_start: bool,
    /// Write the distance matrix as CSV.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Write the order as JSON instead of printing it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderMode {
    Sort,
    Given,
    Random,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    cameras: PathBuf,
    /// Directory with `viewNNN_image.ppm` and `viewNNN_depth.mvfd` per camera.
    #[arg(long)]
    views: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    q: f64,
    #[arg(long, default_value_t = 0.01)]
    q_depth: f64,
    #[arg(long, value_enum, default_value = "sort")]
    order: OrderMode,
    #[arg(long, default_value = "frobenius")]
    norm: Norm,
    /// Seed for `--order random`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = OCCLUSION_EPS_REL)]
    eps_rel: f64,
    /// Code every plane without cross-view prediction.
    #[arg(long)]
    separate: bool,
    #[arg(long)]
    no_mask: bool,
    #[arg(long)]
    no_dep_pred: bool,
    /// Predict images from the unwarped reference.
    #[arg(long)]
    no_warp: bool,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Plane file (.ppm or .mvfd).
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    peak: f64,
    /// Restrict to pixels set in this MVFD mask.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// JSON experiment config; command-line options override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long)]
    q_depth: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    arms: Option<Vec<String>>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    configure_threads()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Render(a) => render(a),
        Command::Disparity(a) => disparity(a),
        Command::Mask(a) => mask(a),
        Command::Cvdp(a) => cvdp_cmd(a),
        Command::Order(a) => order(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
    }
}

/// `MVGEO_THREADS` caps the worker pool; 0 or unset leaves it automatic.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MVGEO_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("MVGEO_THREADS must be an integer, got '{v}'"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn view_file(n: usize, what: &str) -> String {
    format!("view{n:03}_{what}")
}

fn cameras_from(path: &Path) -> Result<Vec<Camera>> {
    load_cameras(path).with_context(|| format!("reading cameras from {}", path.display()))
}

fn camera_at(cams: &[Camera], idx: usize, path: &Path) -> Result<Camera> {
    cams.get(idx).copied().ok_or_else(|| anyhow!("{} holds {} cameras, no view {idx}", path.display(), cams.len()))
}

fn read_plane(path: &Path, kind: PlaneKind) -> Result<Plane> {
    let (found, plane) = read_mvfd(path).with_context(|| format!("reading {}", path.display()))?;
    if found != kind {
        bail!("{}: expected a {kind:?} plane, found {found:?}", path.display());
    }
    Ok(plane)
}

fn read_depth(path: &Path) -> Result<DepthMap> {
    DepthMap::from_plane(read_plane(path, PlaneKind::Depth)?).with_context(|| format!("depth map {}", path.display()))
}

/// An image from a P6 file, or any MVFD plane.
fn read_any(path: &Path) -> Result<Plane> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")) {
        read_ppm(path).with_context(|| format!("reading {}", path.display()))
    } else {
        Ok(read_mvfd(path).with_context(|| format!("reading {}", path.display()))?.1)
    }
}

fn write_plane(path: &Path, kind: PlaneKind, plane: &Plane) -> Result<()> {
    write_mvfd(path, kind, plane).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let arc = ArcSpec {
        radius: a.radius,
        spacing_deg: a.spacing,
        count: a.count,
        focal: a.focal,
        width: a.width,
        height: a.height,
    };
    let (scene, cams) = synthesize_scene(a.seed, a.n, Bbox::cube(a.half), &arc)?;
    create_dir(&a.out)?;
    scene.save(&a.out.join("scene.json"))?;
    save_cameras(&a.out.join("cameras.json"), &cams)?;
    println!("wrote {} gaussians and {} cameras to {}", scene.len(), cams.len(), a.out.display());
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let scene = GaussianScene::load(&a.scene).with_context(|| format!("reading scene {}", a.scene.display()))?;
    if scene.is_empty() {
        bail!("{}: scene holds no gaussians", a.scene.display());
    }
    let cams = cameras_from(&a.cameras)?;
    create_dir(&a.out)?;
    for (n, cam) in cams.iter().enumerate() {
        let r = render_view(&scene, cam);
        write_ppm(&a.out.join(view_file(n, "image.ppm")), &r.color)?;
        write_plane(&a.out.join(view_file(n, "depth.mvfd")), PlaneKind::Depth, r.median_depth.plane())?;
        write_plane(&a.out.join(view_file(n, "weighted_depth.mvfd")), PlaneKind::Depth, r.weighted_depth.plane())?;
        write_plane(&a.out.join(view_file(n, "coverage.mvfd")), PlaneKind::Mask, &r.coverage.to_plane())?;
        println!("view {n}: coverage {:.3}", r.coverage.count() as f64 / (cam.width() * cam.height()) as f64);
    }
    Ok(())
}

fn disparity_for(pair: &PairArgs) -> Result<(DepthMap, Camera, Camera, DisparityMap, Plane)> {
    let cams = cameras_from(&pair.cameras)?;
    let cam = camera_at(&cams, pair.view, &pair.cameras)?;
    let cam_ref = camera_at(&cams, pair.reference, &pair.cameras)?;
    let depth = read_depth(&pair.depth)?;
    let (disp, projected) = estimate_disparity(&depth, &cam, &cam_ref)
        .with_context(|| format!("{} against camera {}", pair.depth.display(), pair.view))?;
    Ok((depth, cam, cam_ref, disp, projected))
}

fn disparity(a: PairArgs) -> Result<()> {
    let (_, _, _, disp, projected) = disparity_for(&a)?;
    write_plane(&a.out, PlaneKind::Disparity, disp.plane())?;
    if let Some(p) = &a.projected {
        write_plane(p, PlaneKind::Depth, &projected)?;
    }
    println!("max |disparity| {:.4} px", disp.max_abs());
    Ok(())
}

fn mask(a: MaskArgs) -> Result<()> {
    let (_, _, cam_ref, disp, projected) = disparity_for(&a.pair)?;
    let ref_depth = read_depth(&a.ref_depth)?;
    if (ref_depth.width(), ref_depth.height()) != (cam_ref.width(), cam_ref.height()) {
        bail!("{}: size does not match reference camera {}", a.ref_depth.display(), a.pair.reference);
    }
    let eps = a.eps.unwrap_or_else(|| occlusion_eps(&ref_depth, a.eps_rel));
    let m = estimate_mask(&disp, &projected, &ref_depth, eps)?;
    write_plane(&a.pair.out, PlaneKind::Mask, &m.to_plane())?;
    if let (Some(img), Some(out)) = (&a.ref_image, &a.warped_out) {
        let warped = warp(&read_any(img)?, &disp);
        write_ppm(out, &warped).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("mask keeps {} of {} pixels (eps {eps:.6})", m.count(), m.width() * m.height());
    Ok(())
}

fn cvdp_cmd(a: CvdpArgs) -> Result<()> {
    let cams = cameras_from(&a.cameras)?;
    let cam = camera_at(&cams, a.view, &a.cameras)?;
    let cam_ref = camera_at(&cams, a.reference, &a.cameras)?;
    let ref_depth = read_depth(&a.ref_depth)?;
    let (pred, hits) =
        cvdp(&ref_depth, &cam_ref, &cam).with_context(|| format!("splatting {}", a.ref_depth.display()))?;
    write_plane(&a.out, PlaneKind::Depth, pred.plane())?;
    if let Some(p) = &a.hits_out {
        write_plane(p, PlaneKind::Mask, &hits.to_plane())?;
    }
    println!("prediction hits {} of {} cells", hits.count(), hits.width() * hits.height());
    Ok(())
}

fn order(a: OrderArgs) -> Result<()> {
    let cams = cameras_from(&a.cameras)?;
    let seq = ViewSequence::new(cams.iter().map(|c| c.extrinsics).collect(), a.norm)?;
    if !a.best_start && a.start >= cams.len() {
        bail!("start view {} out of range for {} cameras", a.start, cams.len());
    }
    let ids = seq.order(if a.best_start { None } else { Some(a.start) })?;
    if let Some(path) = &a.matrix {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        for row in seq.distances.row_iter() {
            w.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
    }
    let json = serde_json::to_string(&ids)?;
    match &a.out {
        Some(path) => fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn encode(a: EncodeArgs) -> Result<()> {
    let cams = cameras_from(&a.cameras)?;
    let ids: Vec<usize> = match a.order {
        OrderMode::Given => (0..cams.len()).collect(),
        OrderMode::Sort => ViewSequence::new(cams.iter().map(|c| c.extrinsics).collect(), a.norm)?.order(Some(0))?,
        OrderMode::Random => {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut ids: Vec<usize> = (0..cams.len()).collect();
            ids.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(a.seed));
            ids
        }
    };
    let views = ids
        .iter()
        .map(|&n| {
            let image = read_ppm(&a.views.join(view_file(n, "image.ppm")))
                .with_context(|| format!("reading image of view {n} from {}", a.views.display()))?;
            let depth = read_depth(&a.views.join(view_file(n, "depth.mvfd")))?;
            Ok(ViewInput { camera: cams[n], image, depth })
        })
        .collect::<Result<Vec<_>>>()?;

    let opts = SequenceOptions {
        q_image: a.q,
        q_depth: a.q_depth,
        image_prediction: !a.separate,
        depth_prediction: !a.separate && !a.no_dep_pred,
        use_mask: !a.no_mask,
        use_warp: !a.no_warp,
        occlusion_eps_rel: a.eps_rel,
    };
    let coded = encode_sequence(&views, &opts)?;

    create_dir(&a.out)?;
    let mut manifest = SequenceManifest::new(a.eps_rel);
    let (mut bytes, mut pixels) = (0usize, 0usize);
    for (&n, ev) in ids.iter().zip(&coded) {
        let image = view_file(n, "image.mvgc");
        let depth = view_file(n, "depth.mvgc");
        ev.image.save(&a.out.join(&image))?;
        ev.depth.save(&a.out.join(&depth))?;
        write_plane(&a.out.join(view_file(n, "image.recon.mvfd")), PlaneKind::Image, &ev.recon_image)?;
        write_plane(&a.out.join(view_file(n, "depth.recon.mvfd")), PlaneKind::Depth, ev.recon_depth.plane())?;
        manifest.views.push(ManifestView { id: n, camera: CameraRecord::from_camera(&cams[n]), image, depth });
        let px = cams[n].width() * cams[n].height();
        println!("view {n}: image {:.4} bpp, depth {:.4} bpp", ev.image.bpp(), ev.depth.bpp());
        bytes += ev.image.len() + ev.depth.len();
        pixels += px;
    }
    manifest.save(&a.out.join("manifest.json"))?;
    println!("order {ids:?}: {:.4} bpp total", 8.0 * bytes as f64 / pixels as f64);
    Ok(())
}

fn decode(a: DecodeArgs) -> Result<()> {
    let manifest = SequenceManifest::load(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let cams = manifest.cameras().with_context(|| format!("cameras in {}", a.manifest.display()))?;
    let streams = manifest.load_streams(&a.manifest).with_context(|| format!("streams of {}", a.manifest.display()))?;
    let decoded = decode_sequence(&cams, &streams, manifest.occlusion_eps_rel)?;
    create_dir(&a.out)?;
    for (v, (image, depth)) in manifest.views.iter().zip(&decoded) {
        write_plane(&a.out.join(view_file(v.id, "image.mvfd")), PlaneKind::Image, image)?;
        write_ppm(&a.out.join(view_file(v.id, "image.ppm")), image)?;
        write_plane(&a.out.join(view_file(v.id, "depth.mvfd")), PlaneKind::Depth, depth.plane())?;
    }
    println!("decoded {} views into {}", decoded.len(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let x = read_any(&a.a)?;
    let y = read_any(&a.b)?;
    let m = match &a.mask {
        Some(p) => Some(MaskMap::from_plane(&read_plane(p, PlaneKind::Mask)?)?),
        None => None,
    };
    if !(a.peak > 0.0) {
        bail!("--peak must be positive");
    }
    let e = mse(&x, &y, m.as_ref()).with_context(|| format!("comparing {} with {}", a.a.display(), a.b.display()))?;
    println!("{}", serde_json::json!({ "mse": e, "psnr": psnr_from_mse(e, a.peak) }));
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(q) = a.q {
        cfg.q_list = q;
    }
    if let Some(q) = a.q_depth {
        cfg.q_depth = q;
    }
    if let Some(arms) = &a.arms {
        cfg.arms = arms.iter().map(|s| s.parse::<Arm>()).collect::<Result<_, _>>()?;
    }
    cfg.validate()?;

    let scenario = Scenario::synthesize(&cfg)?;
    create_dir(&a.out)?;
    let report = run_ablation(&cfg, &scenario, Some(&a.out))?;
    fs::write(a.out.join("rd.csv"), report.to_csv()?).context("writing rd.csv")?;
    fs::write(a.out.join("config.json"), serde_json::to_string_pretty(&cfg)?).context("writing config.json")?;
    let summary = report.summary(&cfg.q_list);
    fs::write(a.out.join("summary.txt"), &summary).context("writing summary.txt")?;
    print!("{summary}");
    Ok(())
}
