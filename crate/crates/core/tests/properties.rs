mod common;

use proptest::prelude::*;

use fieldpos::camera::{sample_poses, CameraPose, PoseDistributionConfig, PosePreset};
use fieldpos::config::PipelineConfig;
use fieldpos::field::{distance_transform, render_edge_image, FieldTemplate};
use fieldpos::geometry::{cross, Homography, ImageSize, Point2};
use fieldpos::registration::iou_part;
use fieldpos::shots::shot_change_score;
use fieldpos::synth::{corrupt_detections, corrupt_homographies, generate_match, NoiseConfig, SynthConfig};
use fieldpos::teams::{assign_teams, Team, TeamClusterConfig};

const SIZE: ImageSize = ImageSize::REFERENCE;

fn field() -> FieldTemplate<f64> {
    FieldTemplate::standard(105.0, 68.0).unwrap()
}

fn arb_pose() -> impl Strategy<Value = CameraPose<f64>> {
    (45.0f64..60.0, -66.0f64..-17.0, 10.0f64..23.0, 1000.0f64..5000.0, -35.0f64..35.0, -18.0f64..-6.0)
        .prop_map(|(x, y, z, f, pan, tilt)| CameraPose::new(x, y, z, f, pan, tilt))
}

fn small_match(frames: usize) -> SynthConfig {
    SynthConfig { frames, ..SynthConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rendered_markings_lie_on_the_distance_zero_set(pose in arb_pose(), lw in 1.0f64..6.0) {
        let f = field();
        let h = pose.homography(SIZE).unwrap();
        let edges = render_edge_image(&f, &h, SIZE, lw).unwrap();
        let dt = distance_transform(&edges, 50.0).unwrap();
        let bound = lw / 2.0 + 0.5;
        for p in f.sample_points(0.25) {
            let Some((u, v)) = common::project(&pose, SIZE, p.x, p.y) else { continue };
            if !(0.0..SIZE.width as f64 - 1.0).contains(&u) || !(0.0..SIZE.height as f64 - 1.0).contains(&v) {
                continue;
            }
            let d = dt.get(u.round() as u32, v.round() as u32) as f64;
            prop_assert!(d <= bound, "distance {d} at ({u:.1}, {v:.1}) for {pose:?}");
        }
    }

    #[test]
    fn rendering_ignores_homography_scale(pose in arb_pose(), s in prop_oneof![-4.0f64..-0.2, 0.2f64..4.0]) {
        let f = field();
        let h = pose.homography(SIZE).unwrap();
        let scaled = Homography::new(h.matrix().map(|r| r.map(|v| v * s))).unwrap();
        prop_assert_eq!(render_edge_image(&f, &h, SIZE, 3.0).unwrap(), render_edge_image(&f, &scaled, SIZE, 3.0).unwrap());
    }

    #[test]
    fn iou_is_symmetric_and_scale_free(a in arb_pose(), b in arb_pose(), s in prop_oneof![-4.0f64..-0.2, 0.2f64..4.0]) {
        let f = field();
        let (ha, hb) = (a.homography(SIZE).unwrap(), b.homography(SIZE).unwrap());
        let v = iou_part(&ha, &hb, SIZE, &f);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v - iou_part(&hb, &ha, SIZE, &f)).abs() < 1e-12);
        let scaled = Homography::new(hb.matrix().map(|r| r.map(|x| x * s))).unwrap();
        prop_assert!((v - iou_part(&ha, &scaled, SIZE, &f)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn homographies_preserve_collinearity(
        pose in arb_pose(),
        (x0, y0, x1, y1) in (0.0f64..105.0, 0.0f64..68.0, 0.0f64..105.0, 0.0f64..68.0),
        t in -1.0f64..2.0,
    ) {
        prop_assume!((x1 - x0).hypot(y1 - y0) > 1.0);
        let h = pose.homography(SIZE).unwrap();
        let pts = [(x0, y0), (x1, y1), (x0 + t * (x1 - x0), y0 + t * (y1 - y0))];
        let img: Vec<Point2<f64>> = pts
            .iter()
            .map(|&(x, y)| {
                let [u, v, w] = h.project(Point2::new(x, y));
                let n = (u * u + v * v + w * w).sqrt();
                Point2::new(u / n, v / n)
            })
            .collect();
        // Homogeneous triple product on unit vectors.
        let q: Vec<[f64; 3]> = pts
            .iter()
            .map(|&(x, y)| {
                let p = h.project(Point2::new(x, y));
                let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                p.map(|c| c / n)
            })
            .collect();
        let det = q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) - q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0])
            + q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
        prop_assert!(det.abs() < 1e-6, "{det}");
        prop_assert!(cross(img[0], img[1], img[2]).is_finite());
    }

    #[test]
    fn pose_sampling_is_deterministic(seed in any::<u64>(), count in 1usize..50) {
        let cfg = PoseDistributionConfig { count, ..PoseDistributionConfig::preset(PosePreset::Extended, seed) };
        let a = sample_poses(&cfg).unwrap();
        let b = sample_poses(&cfg).unwrap();
        prop_assert_eq!(a.len(), count);
        let bits = |v: &[CameraPose<f64>]| v.iter().flat_map(|p| p.to_array().map(f64::to_bits)).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn shot_score_ignores_affine_rescaling_of_one_entry(
        n in 2usize..12,
        seed in any::<u64>(),
        entry in 0usize..8,
        a in 0.1f64..10.0,
        b in -5.0f64..5.0,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let hs: Vec<Option<Homography<f64>>> = (0..n)
            .map(|_| {
                let pose = CameraPose::new(52.0, -45.0, 17.0, rng.random_range(1500.0..4000.0), rng.random_range(-30.0..30.0), rng.random_range(-15.0..-6.0));
                (rng.random_range(0.0..1.0) > 0.15).then(|| pose.homography(SIZE).unwrap())
            })
            .collect();
        let moved: Option<Vec<Option<Homography<f64>>>> = hs
            .iter()
            .map(|h| match h {
                None => Some(None),
                Some(h) => {
                    let mut v = h.to_row_major();
                    v[entry] = a * v[entry] + b;
                    Homography::from_row_major(v).ok().map(Some)
                }
            })
            .collect();
        let Some(moved) = moved else { return Ok(()) };
        let (s0, s1) = (shot_change_score(&hs).unwrap(), shot_change_score(&moved).unwrap());
        prop_assert!((s0 - s1).abs() <= 1e-9 * s0.max(1.0), "{s0} vs {s1}");
    }

    #[test]
    fn config_text_round_trips(tau in 0.0f64..2.0, rho in 0.0f64..20.0, q in 0.05f64..1.0, frames in 1usize..5000) {
        let mut cfg = PipelineConfig::default();
        cfg.tau = tau;
        cfg.rho = rho;
        cfg.q = q;
        cfg.synth.frames = frames;
        let back = PipelineConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), cfg.to_text());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn synthetic_players_stay_on_the_field_and_respect_the_speed_cap(seed in any::<u64>(), v_max in 2.0f64..10.0) {
        let cfg = SynthConfig { v_max, ..small_match(150) };
        let m = generate_match(&cfg, seed).unwrap();
        let step = v_max / cfg.frame_rate + 1e-9;
        for f in 0..m.frame_count() {
            for (i, p) in m.positions[f].iter().enumerate() {
                prop_assert!((0.0..=105.0).contains(&p.x) && (0.0..=68.0).contains(&p.y), "{p:?}");
                if f > 0 {
                    prop_assert!(p.distance(&m.positions[f - 1][i]) <= step);
                }
            }
            prop_assert!(m.poses[f].homography(SIZE).unwrap().max_abs_diff(&m.homographies[f]) < 1e-9);
        }
        prop_assert_eq!(generate_match(&cfg, seed).unwrap(), m);
    }

    #[test]
    fn noiseless_corruption_is_the_identity(seed in any::<u64>()) {
        let m = generate_match(&small_match(20), seed).unwrap();
        let frames = corrupt_detections(&m, &NoiseConfig::default(), seed).unwrap();
        for fd in &frames {
            let f = fd.frame as usize;
            prop_assert_eq!(fd.detections.len(), fd.sources.len());
            for (d, src) in fd.detections.iter().zip(&fd.sources) {
                let id = src.expect("no false positives without noise");
                let i = m.players.iter().position(|p| p.id == id).unwrap();
                let g = m.positions[f][i];
                let (u, v) = common::project(&m.poses[f], SIZE, g.x, g.y).unwrap();
                let a = d.anchor();
                prop_assert!((a.x - u).abs() < 1e-6 && (a.y - v).abs() < 1e-6);
            }
        }
        let (hs, flags) = corrupt_homographies(&m, &NoiseConfig::default(), seed).unwrap();
        prop_assert!(flags.iter().all(|&c| !c));
        prop_assert_eq!(hs, m.homographies);
    }
}

#[test]
fn dropout_rate_matches_configuration() {
    let m = generate_match(&small_match(300), 3).unwrap();
    let clean: usize = corrupt_detections(&m, &NoiseConfig::default(), 3).unwrap().iter().map(|f| f.detections.len()).sum();
    let noisy: usize =
        corrupt_detections(&m, &NoiseConfig { dropout: 0.3, ..NoiseConfig::default() }, 3).unwrap().iter().map(|f| f.detections.len()).sum();
    let dropped = (clean - noisy) as f64 / clean as f64;
    // Four binomial standard deviations.
    let tol = 4.0 * (0.3 * 0.7 / clean as f64).sqrt();
    assert!((dropped - 0.3).abs() <= tol, "dropped {dropped:.4} of {clean}");
}

#[test]
fn corruption_probability_matches_configuration() {
    let m = generate_match(&small_match(1000), 4).unwrap();
    let noise = NoiseConfig { homography_corruption_prob: 0.1, homography_corruption_magnitude: 20.0, ..NoiseConfig::default() };
    let (hs, flags) = corrupt_homographies(&m, &noise, 4).unwrap();
    let n = flags.iter().filter(|&&c| c).count();
    assert!((70..=130).contains(&n), "{n} corrupted");
    for ((h, g), &c) in hs.iter().zip(&m.homographies).zip(&flags) {
        assert_eq!(h == g, !c);
    }
}

#[test]
fn false_positives_and_referee_are_labelled_other() {
    let m = generate_match(&small_match(100), 5).unwrap();
    let noise = NoiseConfig { false_positive_rate: 1.0, ..NoiseConfig::default() };
    let frames = corrupt_detections(&m, &noise, 5).unwrap();
    let (mut idx, mut feats, mut truth) = (Vec::new(), Vec::new(), Vec::new());
    for fd in &frames {
        for (c, src) in fd.colors.iter().zip(&fd.sources) {
            idx.push(fd.frame);
            feats.push(c.embed());
            truth.push(src.map(|id| m.players.iter().find(|p| p.id == id).unwrap().label()));
        }
    }
    let fps = truth.iter().filter(|t| t.is_none()).count();
    assert!(fps > 30, "{fps} false positives");
    let got = assign_teams(&idx, &feats, &TeamClusterConfig::default()).unwrap();
    // A/B names are arbitrary; resolve them against the ground truth.
    let score = |swap: bool| {
        truth
            .iter()
            .zip(&got.labels)
            .filter(|(t, g)| {
                let g = if swap { g.other_team() } else { **g };
                t.unwrap_or(Team::Other) == g
            })
            .count()
    };
    let swap = score(true) > score(false);
    for (t, g) in truth.iter().zip(&got.labels) {
        let g = if swap { g.other_team() } else { *g };
        match t {
            None | Some(Team::Other) => assert_eq!(g, Team::Other),
            Some(t) => assert_eq!(g, *t),
        }
    }
}
