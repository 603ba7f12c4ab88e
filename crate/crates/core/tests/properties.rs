use std::f64::consts::PI;

use bodyfit_core::animation::{spine_bend, two_bone_ik};
use bodyfit_core::calibration::{AccumulatorConfig, CenterAccumulator, HeadGrid, HeadGridConfig, Progress};
use bodyfit_core::coupling::{compute_offsets, CouplingFrame, Placement};
use bodyfit_core::device_id::{identify_trackers, BodyRole, IdentifyConfig};
use bodyfit_core::eval::Stats;
use bodyfit_core::geometry::{fit_plane, fit_sphere, Pose, Quat, Vec3};
use bodyfit_core::io::{parse_skeleton, write_skeleton, TrackerStream};
use bodyfit_core::skeleton::{make_variant, tune_chains, uniform_scale, AvatarVariant, JointName, Skeleton, VariantDeltas};
use bodyfit_core::synth::{device_index, emit_tpose, simulate, Exercise, ExerciseFrames, GroundTruthBody, NoiseModel};
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("non-zero", |v| v.norm() > 0.1).prop_map(|v| v.normalize())
}

fn rotation() -> impl Strategy<Value = Quat> {
    (unit(), -PI..PI).prop_map(|(axis, angle)| Quat::from_scaled_axis(axis * angle))
}

fn variant() -> impl Strategy<Value = AvatarVariant> {
    prop::sample::select(AvatarVariant::ALL.to_vec())
}

fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
    (a - b).norm() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sphere_fit_recovers_clean_caps(c in vec3(2.0), r in 0.1f64..1.0, q in rotation()) {
        let pts: Vec<Vec3> = (0..40)
            .map(|i| {
                let polar = (5.0 + 1.5 * i as f64).to_radians();
                let az = i as f64 * 2.399;
                c + q * (r * Vec3::new(polar.cos(), polar.sin() * az.cos(), polar.sin() * az.sin()))
            })
            .collect();
        let fit = fit_sphere(&pts).unwrap();
        prop_assert!(close(&fit.center, &c, 1e-8));
        prop_assert!((fit.radius - r).abs() < 1e-8);
    }

    #[test]
    fn plane_fit_contains_coplanar_points(n in unit(), d in -2.0f64..2.0, seeds in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5..30)) {
        let u = n.cross(&Vec3::new(0.3, 0.5, 0.8)).normalize();
        let v = n.cross(&u);
        let pts: Vec<Vec3> = seeds.iter().map(|(a, b)| n * d + u * *a + v * *b).collect();
        let Ok(plane) = fit_plane(&pts) else { return Ok(()) };
        for p in &pts {
            prop_assert!(plane.signed_distance(p).abs() < 1e-9);
        }
        prop_assert!((plane.normal.dot(&n).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn accepted_points_keep_their_spacing(c in vec3(1.0), samples in prop::collection::vec(unit(), 1..300)) {
        let mut acc = CenterAccumulator::new(AccumulatorConfig::SHOULDER).unwrap();
        let mut last = 0;
        for s in &samples {
            let step = acc.accumulate(c + s * 0.6).unwrap();
            prop_assert!(acc.accepted() >= last);
            last = acc.accepted();
            if let Progress::Finished(_) = step {
                prop_assert!(acc.accepted() >= AccumulatorConfig::SHOULDER.min_points);
                break;
            }
        }
        let pts = acc.points();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                prop_assert!((pts[i] - pts[j]).norm() >= AccumulatorConfig::SHOULDER.min_spacing);
            }
        }
    }

    #[test]
    fn head_grid_displacements_never_shrink(steps in prop::collection::vec(rotation(), 1..40), pivot in vec3(0.2)) {
        let origin = Pose::at(Vec3::new(0.0, 1.6, 0.0));
        let mut grid = HeadGrid::new(HeadGridConfig::default(), &origin).unwrap();
        let mut prev = grid.displacements().to_vec();
        for (k, q) in steps.iter().enumerate() {
            let p = origin.position + pivot;
            let pose = Pose::new(p + q * (origin.position - p), *q, k as f64);
            grid.update(&pose);
            for (a, b) in prev.iter().zip(grid.displacements()) {
                prop_assert!(b >= a);
            }
            prev = grid.displacements().to_vec();
        }
    }

    #[test]
    fn identification_ignores_yaw_and_translation(heading in -PI..PI, x in -3.0f64..3.0, z in -3.0f64..3.0, eye in 1.4f64..1.95, seed in 0u64..1000) {
        let body = GroundTruthBody {
            origin: Vec3::new(x, 0.0, z),
            heading,
            ..GroundTruthBody::scaled(eye)
        };
        let snap = emit_tpose(&body, NoiseModel::position(0.002), seed).unwrap();
        let roles = identify_trackers(&snap, &IdentifyConfig::default()).unwrap();
        for role in BodyRole::ALL {
            prop_assert_eq!(roles.device(role), device_index(role));
        }
    }

    #[test]
    fn uniform_scale_preserves_ratios(h in 1.0f64..2.2, target in 1.0f64..2.2) {
        let base = Skeleton::standard(h).unwrap();
        let scaled = uniform_scale(&base, target).unwrap();
        let k = target / base.eye_height();
        prop_assert!((scaled.eye_height() - target).abs() < 1e-12);
        for name in JointName::ALL {
            if base.has(name) {
                prop_assert!(close(&scaled.offset(name), &(base.offset(name) * k), 1e-12));
            }
        }
    }

    #[test]
    fn tuning_reaches_the_measurements_and_is_idempotent(
        h in 1.45f64..1.95,
        v in variant(),
        start in variant(),
        ws in 0.0f64..0.3,
        ll in 0.0f64..0.15,
    ) {
        let deltas = VariantDeltas { shoulder_width: ws, leg_length: ll };
        let target = make_variant(&Skeleton::standard(h).unwrap(), v, &deltas).unwrap();
        let m = target.self_measurements();
        let base = make_variant(&Skeleton::standard(1.6).unwrap(), start, &VariantDeltas::default()).unwrap();
        let (fitted, _) = tune_chains(&uniform_scale(&base, m.hmd_height).unwrap(), &m).unwrap();
        let (want, got) = (target.dimensions(), fitted.dimensions());
        prop_assert!((got.eye_height - want.eye_height).abs() < 1e-9);
        prop_assert!((got.leg_left - want.leg_left).abs() < 1e-9);
        prop_assert!((got.arm_right - want.arm_right).abs() < 1e-9);
        prop_assert!((got.shoulder_width - want.shoulder_width).abs() < 1e-9);
        prop_assert!((got.shoulder_height - want.shoulder_height).abs() < 1e-9);

        let (again, scales) = tune_chains(&fitted, &m).unwrap();
        for name in JointName::ALL {
            if fitted.has(name) {
                prop_assert!(close(&again.offset(name), &fitted.offset(name), 1e-9));
            }
        }
        prop_assert!((scales.left_leg - 1.0).abs() < 1e-9);
    }

    #[test]
    fn coupling_round_trips(
        origin in vec3(2.0),
        heading in -PI..PI,
        poses in prop::collection::vec((vec3(2.0), rotation()), 4),
    ) {
        let sk = Skeleton::standard(1.7).unwrap();
        let placement = Placement::new(origin, heading);
        let pose = |k: usize| Pose::new(poses[k].0, poses[k].1, 1.0);
        let frame = CouplingFrame { hmd: pose(0), root: pose(1), lfoot: pose(2), rfoot: pose(3) };
        let Ok(offsets) = compute_offsets(&sk, &placement, &frame, Vec3::new(0.0, 0.0, 0.09)) else { return Ok(()) };
        for b in &offsets.bindings {
            let tracker = frame.tracker(b.role).unwrap();
            let (p, q) = b.apply(tracker);
            prop_assert!(close(&p, &placement.apply(&sk.world_position(b.joint)), 1e-9));
            prop_assert!(q.angle_to(&placement.heading) < 1e-9);
        }
    }

    #[test]
    fn ik_keeps_bone_lengths(root in vec3(1.0), target in vec3(2.0), pole in unit(), upper in 0.05f64..0.6, lower in 0.05f64..0.6) {
        let Ok(sol) = two_bone_ik(root, upper, lower, target, pole) else { return Ok(()) };
        prop_assert!(((sol.mid - root).norm() - upper).abs() < 1e-9);
        prop_assert!(((sol.end - sol.mid).norm() - lower).abs() < 1e-9);
        prop_assert!(sol.interior_angle >= 0.0 && sol.interior_angle <= PI + 1e-12);
    }

    #[test]
    fn spine_steps_compose_to_the_full_bend(rest in unit(), current in unit(), n in 1usize..6) {
        let Ok((step, angle)) = spine_bend(&rest, &current, n) else { return Ok(()) };
        let mut v = rest;
        for _ in 0..n {
            v = step * v;
        }
        prop_assert!(close(&v, &current, 1e-9));
        prop_assert!((angle - rest.angle(&current)).abs() < 1e-9);
    }

    #[test]
    fn stats_are_ordered(xs in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let s = Stats::of(&xs).unwrap();
        prop_assert!(s.min <= s.mean + 1e-9 && s.mean <= s.max + 1e-9);
        prop_assert!(s.sd >= 0.0);
        prop_assert_eq!(s.count, xs.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stream_text_round_trips(seed in 0u64..10_000, sigma in 0.0f64..0.01) {
        let frames = ExerciseFrames { tpose: 3, neck: 20, head: 20, ..ExerciseFrames::default() };
        let stream = simulate(
            &GroundTruthBody::default(),
            &[Exercise::TPose, Exercise::Head],
            &frames,
            NoiseModel { position_sigma: sigma, orientation_sigma: sigma },
            seed,
            90.0,
        )
        .unwrap();
        let text = stream.to_text();
        let back = TrackerStream::parse(&text, "stream").unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.frames.len(), stream.frames.len());
    }

    #[test]
    fn skeleton_text_round_trips(h in 1.2f64..2.2, v in variant()) {
        let sk = make_variant(&Skeleton::standard(h).unwrap(), v, &VariantDeltas::default()).unwrap();
        let text = write_skeleton(&sk);
        let back = parse_skeleton(&text, "skeleton").unwrap();
        prop_assert_eq!(write_skeleton(&back), text);
        prop_assert_eq!(back.variant, sk.variant);
    }
}
