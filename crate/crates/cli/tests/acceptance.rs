//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its PASS/FAIL line; exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Point3, Rotation3, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvgeo_core::codec::{encode_sequence, range_decode, range_encode, ViewInput};
use mvgeo_core::cvdp::cvdp;
use mvgeo_core::disparity::disparity_and_mask;
use mvgeo_core::experiment::{alignment, median_vs_weighted, run_ablation, Arm, ExperimentConfig, Scenario};
use mvgeo_core::geometry::Extrinsics;
use mvgeo_core::ordering::{distance_matrix, greedy_order, view_distance, Norm, ViewSequence};
use mvgeo_core::scene::{composite, render_view, synthesize_scene, ArcSpec, Bbox, Contribution, TwoWallSpec};

const TIME_LIMIT: Duration = Duration::from_secs(60);
const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("metric axioms", metric_axioms),
        ("closed-form distances", closed_form_distances),
        ("zero-disparity identity", zero_disparity),
        ("oracle equivalence", oracle_equivalence),
        ("transmittance partition", transmittance_partition),
        ("median vs weighted depth", median_vs_weighted_depth),
        ("alignment gain", alignment_gain),
        ("codec losslessness and bound", codec_bound),
        ("ablation direction", ablation_direction),
        ("greedy ordering recovery", ordering_recovery),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = run();
        let took = start.elapsed();
        let ok = ok && took < TIME_LIMIT;
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            n + 1,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn metric_axioms() -> Outcome {
    let mut rng = common::rng(0xa1);
    let mut failures = 0;
    let (mut worst_sym, mut worst_tri) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let v: Vec<Extrinsics> = (0..3).map(|_| common::random_se3(&mut rng)).collect();
        for norm in [Norm::Frobenius, Norm::Spectral] {
            let d = |a: usize, b: usize| view_distance(&v[a], &v[b], norm);
            let sym = (d(0, 1) - d(1, 0)).abs();
            let tri = d(0, 1) - (d(1, 2) + d(2, 0));
            worst_sym = worst_sym.max(sym);
            worst_tri = worst_tri.max(tri);
            let ok = d(0, 1) > 0.0 && d(0, 0) == 0.0 && d(1, 2) >= 0.0 && sym < 1e-9 && tri <= 1e-9;
            failures += usize::from(!ok);
        }
    }
    (failures == 0, format!("1000 triples x 2 norms, {failures} failures, max asymmetry {worst_sym:.1e}, max triangle excess {worst_tri:.2}"))
}

fn closed_form_distances() -> Outcome {
    let mut rng = common::rng(0xa2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t = Vector3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let d = view_distance(&Extrinsics::from_translation(t), &Extrinsics::identity(), Norm::Frobenius);
        worst = worst.max((d - t.norm()).abs());
    }
    let quarter = Rotation3::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
    let rot = Extrinsics::new(*quarter.matrix(), Vector3::zeros()).expect("rotation");
    let rot_err = (view_distance(&rot, &Extrinsics::identity(), Norm::Frobenius) - 2.0).abs();
    (worst <= 1e-12 && rot_err <= 1e-12, format!("translation error {worst:.1e}, quarter-turn error {rot_err:.1e}"))
}

fn zero_disparity() -> Outcome {
    let cfg = ExperimentConfig::default();
    let (scene, cams) =
        synthesize_scene(cfg.seed, cfg.n_gaussians, Bbox::cube(cfg.bbox_half), &cfg.arc).expect("scene");
    let mut worst = 0.0f32;
    let mut pixels = 0;
    for cam in &cams {
        let depth = render_view(&scene, cam).median_depth;
        let (disp, _) = disparity_and_mask(&depth, &depth, cam, cam, 0.0).expect("disparity");
        for j in 0..depth.height() {
            for i in 0..depth.width() {
                if disp.is_valid(i, j) {
                    let (dx, dy) = disp.get(i, j);
                    worst = worst.max(dx.abs()).max(dy.abs());
                    pixels += 1;
                }
            }
        }
    }
    (worst < 1e-9 && pixels > 0, format!("{} views, {pixels} pixels, max |disparity| {worst:e} px", cams.len()))
}

fn oracle_equivalence() -> Outcome {
    const INSTANCES: u64 = 200;
    let mut mismatches = 0;
    let mut shuffle_rng = common::rng(0xa4);
    for seed in 0..INSTANCES {
        let inst = common::random_pair(seed);
        let (cam, cam_ref) = (common::ScalarCam::of(&inst.cam), common::ScalarCam::of(&inst.cam_ref));
        let eps = 0.05 * (seed % 3) as f64;
        let (disp, mask) =
            disparity_and_mask(&inst.depth, &inst.ref_depth, &inst.cam, &inst.cam_ref, eps).expect("mask");
        let (want_disp, want_mask) =
            common::disparity_mask_oracle(inst.depth.data(), inst.ref_depth.data(), &cam, &cam_ref, eps);
        let same = |a: f32, b: f32| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        for k in 0..64 {
            let (dx, dy) = disp.get(k % 8, k / 8);
            if !same(dx, want_disp[k].0) || !same(dy, want_disp[k].1) || mask.data()[k] != want_mask[k] {
                mismatches += 1;
            }
        }

        let (pred, hits) = cvdp(&inst.ref_depth, &inst.cam_ref, &inst.cam).expect("cvdp");
        let mut candidates = common::cvdp_candidates(inst.ref_depth.data(), &cam_ref, &cam);
        candidates.shuffle(&mut shuffle_rng);
        let (want_pred, want_hits) = common::cvdp_oracle(&candidates, 64);
        for k in 0..64 {
            if pred.data()[k].to_bits() != want_pred[k].to_bits() || hits.data()[k] != want_hits[k] {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, format!("{INSTANCES} random 8x8 instances each, {mismatches} mismatching cells"))
}

fn transmittance_partition() -> Outcome {
    let mut rng = common::rng(0xa5);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let m = rng.gen_range(0..64);
        let mut stack: Vec<Contribution> = (0..m)
            .map(|_| Contribution::new(rng.gen_range(0.0..=1.0), [rng.gen(); 3], rng.gen_range(0.1..10.0)))
            .collect();
        stack.sort_by(|a, b| a.z.total_cmp(&b.z));
        let (_, t) = composite(&stack, [0.0; 3]);
        let total: f64 = stack.iter().zip(&t).map(|(c, t)| t * c.alpha).sum::<f64>() + t[m];
        worst = worst.max((total - 1.0).abs());
    }
    (worst <= 1e-12, format!("10000 random stacks, max |sum - 1| {worst:.1e}"))
}

fn median_vs_weighted_depth() -> Outcome {
    let spec = TwoWallSpec::default();
    let (mut strict, mut worse) = (0, 0);
    let mut gains = Vec::new();
    for seed in SEEDS {
        let c = median_vs_weighted(seed, &spec).expect("two-wall scene");
        strict += usize::from(c.median_psnr > c.weighted_psnr);
        worse += usize::from(c.median_psnr < c.weighted_psnr);
        gains.push(c.median_psnr - c.weighted_psnr);
    }
    (
        worse == 0 && strict >= 8,
        format!("median better on {strict}/10, worse on {worse}/10, mean gain {:.2} dB", mean(&gains)),
    )
}

fn alignment_gain() -> Outcome {
    let cfg = ExperimentConfig::default();
    let (mut passed, mut min_overlap, mut min_gain) = (0, f64::INFINITY, f64::INFINITY);
    for seed in SEEDS {
        let (scene, cams) =
            synthesize_scene(seed, cfg.n_gaussians, Bbox::cube(cfg.bbox_half), &cfg.arc).expect("scene");
        // neighbours in the middle of the arc
        let (target, reference) = (cfg.arc.count / 2 - 1, cfg.arc.count / 2);
        let a = alignment(
            &render_view(&scene, &cams[target]),
            &render_view(&scene, &cams[reference]),
            &cams[target],
            &cams[reference],
            cfg.occlusion_eps_rel,
        )
        .expect("alignment");
        min_overlap = min_overlap.min(a.overlap);
        min_gain = min_gain.min(a.gain());
        passed += usize::from(a.overlap >= 0.5 && a.gain() >= 2.0);
    }
    (passed == 10, format!("{passed}/10 seeds, min overlap {min_overlap:.2}, min gain {min_gain:.2} dB"))
}

fn codec_bound() -> Outcome {
    let mut rng = common::rng(0xa8);
    let mut lossy = 0;
    for k in 0..10_000 {
        let n = rng.gen_range(0..256);
        let spread: i32 = [1, 4, 64, 1 << 20][k % 4];
        let symbols: Vec<i32> = (0..n).map(|_| rng.gen_range(-spread..=spread)).collect();
        let ctx: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let ctx = (k % 2 == 1).then_some(ctx.as_slice());
        let ok = range_encode(&symbols, ctx)
            .and_then(|bytes| range_decode(&bytes, n, ctx))
            .is_ok_and(|back| back == symbols);
        lossy += usize::from(!ok);
    }

    let (q, q_depth) = (0.02, 0.01);
    let (mut violations, mut worst_img, mut worst_depth, mut fixtures) = (0, 0.0f64, 0.0f64, 0);
    for seed in SEEDS {
        let cfg = ExperimentConfig { seed, ..ExperimentConfig::default() };
        let scenario = Scenario::synthesize(&cfg).expect("scenario");
        let order = scenario.sorted_order(cfg.norm, false).expect("order");
        let views: Vec<ViewInput> = order.iter().map(|&id| scenario.view(id)).collect();
        for arm in Arm::ALL {
            let coded = encode_sequence(&views, &arm.options(q, q_depth, cfg.occlusion_eps_rel)).expect("encode");
            fixtures += 1;
            for (v, c) in views.iter().zip(&coded) {
                for (a, b) in c.recon_image.data().iter().zip(v.image.data()) {
                    let e = (*a as f64 - *b as f64).abs();
                    worst_img = worst_img.max(e);
                    violations += usize::from(!within_half_step(*a, *b, q));
                }
                for (a, b) in c.recon_depth.data().iter().zip(v.depth.data()) {
                    let e = (*a as f64 - *b as f64).abs();
                    worst_depth = worst_depth.max(e);
                    violations += usize::from(!within_half_step(*a, *b, q_depth) || (*a > 0.0) != (*b > 0.0));
                }
            }
        }
    }
    (
        lossy == 0 && violations == 0,
        format!(
            "10000 planes, {lossy} lossy; {fixtures} coded sequences, {violations} samples over q/2 \
             (max image error {worst_img:.5} at q {q}, max depth error {worst_depth:.5} at q {q_depth})"
        ),
    )
}

/// `|a − b| ≤ q/2` up to the final rounding of the reconstruction to f32.
fn within_half_step(a: f32, b: f32, q: f64) -> bool {
    let ulp = f32::EPSILON as f64 * a.abs().max(b.abs()).max(f32::MIN_POSITIVE) as f64;
    // the container carries the step as f32
    let q = q as f32 as f64;
    ((a as f64) - (b as f64)).abs() <= q / 2.0 + ulp
}

fn ablation_direction() -> Outcome {
    let q = 0.02;
    let comparisons: [(Arm, &str, bool); 4] = [
        (Arm::Separate, "separate", true),
        (Arm::WoMask, "w/o mask", false),
        (Arm::WoDepPred, "w/o dep.pred", true),
        (Arm::Random, "random", false),
    ];
    let mut wins = [0usize; 4];
    let mut increase = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for seed in SEEDS {
        let cfg = ExperimentConfig { seed, q_list: vec![q], ..ExperimentConfig::default() };
        let scenario = Scenario::synthesize(&cfg).expect("scenario");
        let report = run_ablation(&cfg, &scenario, None).expect("ablation");
        let sort = report.total_bpp(Arm::Sort, q).expect("sort row");
        for (k, (arm, _, strict)) in comparisons.iter().enumerate() {
            let other = report.total_bpp(*arm, q).expect("arm row");
            wins[k] += usize::from(if *strict { sort < other } else { sort <= other });
            increase[k].push(100.0 * (other - sort) / sort);
        }
    }
    let ok = wins.iter().all(|&w| w >= 8);
    let detail = comparisons
        .iter()
        .zip(wins.iter().zip(&increase))
        .map(|((_, name, _), (w, inc))| format!("vs {name} {w}/10 (+{:.1}%)", mean(inc)))
        .collect::<Vec<_>>()
        .join(", ");
    (ok, detail)
}

fn ordering_recovery() -> Outcome {
    let arc = ArcSpec { radius: 4.0, spacing_deg: 6.0, count: 12, focal: 100.0, width: 32, height: 32 };
    let cams = arc.cameras(Point3::origin()).expect("arc");
    let forward: Vec<usize> = (0..arc.count).collect();
    let backward: Vec<usize> = forward.iter().rev().copied().collect();
    let mut passed = 0;
    for seed in SEEDS {
        let mut perm = forward.clone();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let views: Vec<Extrinsics> = perm.iter().map(|&k| cams[k].extrinsics).collect();
        let mut ok = true;
        for norm in [Norm::Frobenius, Norm::Spectral] {
            let d = distance_matrix(&views, norm).expect("distances");
            let at = |arc_pos: usize| perm.iter().position(|&k| k == arc_pos).expect("present");
            let unshuffle = |order: Vec<usize>| order.into_iter().map(|p| perm[p]).collect::<Vec<_>>();
            ok &= unshuffle(greedy_order(&d, at(0)).expect("greedy")) == forward;
            ok &= unshuffle(greedy_order(&d, at(arc.count - 1)).expect("greedy")) == backward;
            let best = ViewSequence::new(views.clone(), norm).and_then(|s| s.order(None)).expect("best start");
            let best = unshuffle(best);
            ok &= best == forward || best == backward;
        }
        passed += usize::from(ok);
    }
    (passed == 10, format!("{passed}/10 shuffled 12-camera arcs recovered (both norms, both endpoints, best start)"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mvgeo"))
            .args(["ablate", "--seed", "7", "--q", "0.01,0.04", "--out"])
            .arg(&out)
            .env("MVGEO_THREADS", if name == "a" { "1" } else { "0" })
            .output()
            .expect("run ablate");
        (status.status.success(), files(&out))
    };
    let (ok_a, a) = run("a");
    let (ok_b, b) = run("b");
    let streams = a.keys().filter(|k| k.ends_with(".mvgc")).count();
    let same = a == b;
    (
        ok_a && ok_b && same && streams > 0 && a.contains_key("rd.csv"),
        format!("{} files ({streams} streams) {}", a.len(), if same { "byte-identical" } else { "DIFFER" }),
    )
}

/// Relative path to contents for every file below `root`.
fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("below root").to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).expect("readable"));
            }
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}
