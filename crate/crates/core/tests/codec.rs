use mvgeo_core::codec::{decode_sequence, encode_image, encode_sequence, Bitstream, ViewInput};
use mvgeo_core::experiment::{Arm, ExperimentConfig, Scenario};
use mvgeo_core::plane::Plane;
use mvgeo_core::scene::ArcSpec;

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: 3,
        n_gaussians: 1500,
        arc: ArcSpec { radius: 4.0, spacing_deg: 5.0, count: 4, focal: 70.0, width: 32, height: 32 },
        ..ExperimentConfig::default()
    }
}

fn views(s: &Scenario, order: &[usize]) -> Vec<ViewInput> {
    order.iter().map(|&k| s.view(k)).collect()
}

fn total_bits(streams: &[(Bitstream, Bitstream)]) -> usize {
    streams.iter().map(|(a, b)| 8 * (a.len() + b.len())).sum()
}

fn within_half_step(a: f32, b: f32, q: f64) -> bool {
    let ulp = f32::EPSILON as f64 * a.abs().max(b.abs()).max(f32::MIN_POSITIVE) as f64;
    // the container carries the step as f32
    let q = q as f32 as f64;
    ((a as f64) - (b as f64)).abs() <= q / 2.0 + ulp
}

#[test]
fn every_arm_decodes_to_the_encoder_reconstruction() {
    let cfg = small_config();
    let s = Scenario::synthesize(&cfg).unwrap();
    let order = s.sorted_order(cfg.norm, false).unwrap();
    let input = views(&s, &order);
    let cams: Vec<_> = input.iter().map(|v| v.camera).collect();
    for arm in Arm::ALL {
        let (q, qd) = (0.03, 0.02);
        let opts = arm.options(q, qd, cfg.occlusion_eps_rel);
        let coded = encode_sequence(&input, &opts).unwrap();
        let streams: Vec<_> = coded.iter().map(|v| (v.image.clone(), v.depth.clone())).collect();
        let decoded = decode_sequence(&cams, &streams, cfg.occlusion_eps_rel).unwrap();
        for ((view, enc), (img, depth)) in input.iter().zip(&coded).zip(&decoded) {
            assert_eq!(&enc.recon_image, img, "{}", arm.name());
            assert_eq!(&enc.recon_depth, depth, "{}", arm.name());
            for (a, b) in img.data().iter().zip(view.image.data()) {
                assert!(within_half_step(*a, *b, q), "{}: image {a} vs {b}", arm.name());
            }
            for (a, b) in depth.data().iter().zip(view.depth.data()) {
                assert_eq!(*a > 0.0, *b > 0.0);
                assert!(within_half_step(*a, *b, qd), "{}: depth {a} vs {b}", arm.name());
            }
        }
    }
}

#[test]
fn coarser_steps_never_cost_more_bits() {
    let cfg = small_config();
    let s = Scenario::synthesize(&cfg).unwrap();
    let order = s.sorted_order(cfg.norm, false).unwrap();
    let input = views(&s, &order);
    let sweep = [0.004, 0.008, 0.016, 0.032, 0.064, 0.128, 0.256];
    for arm in Arm::ALL {
        let mut last = usize::MAX;
        for q in sweep {
            let coded = encode_sequence(&input, &arm.options(q, q, cfg.occlusion_eps_rel)).unwrap();
            let bits = total_bits(&coded.into_iter().map(|v| (v.image, v.depth)).collect::<Vec<_>>());
            assert!(bits <= last, "{} at q {q}: {bits} bits after {last}", arm.name());
            last = bits;
        }
    }

    let image = &s.renders[0].color;
    let mut last = usize::MAX;
    for q in sweep {
        let bits = encode_image(image, None, q).unwrap().0.len() * 8;
        assert!(bits <= last);
        last = bits;
    }
}

#[test]
fn flat_image_costs_almost_nothing() {
    let (bs, recon) = encode_image(&Plane::filled(64, 64, 3, 0.5), None, 0.01).unwrap();
    assert!(bs.bpp() < 0.1, "{} bpp", bs.bpp());
    assert!(recon.data().iter().all(|&v| (v - 0.5).abs() <= 0.005));
}

#[test]
fn decoder_rejects_streams_out_of_sequence() {
    let cfg = small_config();
    let s = Scenario::synthesize(&cfg).unwrap();
    let input = views(&s, &[0, 1]);
    let coded = encode_sequence(&input, &Arm::Sort.options(0.02, 0.01, cfg.occlusion_eps_rel)).unwrap();
    let cams = [input[1].camera];
    let second = [(coded[1].image.clone(), coded[1].depth.clone())];
    assert!(decode_sequence(&cams, &second, cfg.occlusion_eps_rel).is_err());
    let both: Vec<_> = coded.iter().map(|v| (v.image.clone(), v.depth.clone())).collect();
    assert!(decode_sequence(&cams, &both, cfg.occlusion_eps_rel).is_err());
}
