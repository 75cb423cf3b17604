use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use signseg::features::{assemble_features, optical_flow, FeatureLayout, FeatureOptions};
use signseg::geometry::{apply, axis_angle, Mat3, Vec3};
use signseg::hand::{
    cce, estimate_plane, estimate_rotation, estimate_view, hand_normalize, mace, HandGroup, HandPose, Handedness,
    NUM_HAND_POINTS,
};
use signseg::pose::{
    normalize_pose, parse_pose_file, resample_fps, select_points, serialize_pose_file, Component, PointSelector,
    PoseHeader, PoseSequence, BODY, HOLISTIC_BODY_POINTS, LEFT_SHOULDER, RIGHT_SHOULDER,
};
use signseg::synthetic::{synthetic_hand, synthetic_sample};

#[derive(Debug, Clone)]
struct Similarity {
    rotation: Mat3,
    scale: f64,
    shift: Vec3,
}

impl Similarity {
    fn apply(&self, p: Vec3) -> Vec3 {
        let q = apply(&self.rotation, p);
        [0, 1, 2].map(|a| self.scale * q[a] + self.shift[a])
    }
}

fn arb_rotation() -> impl Strategy<Value = Mat3> {
    (-1.0f64..1.0, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU).prop_map(|(z, phi, angle)| {
        let r = (1.0 - z * z).sqrt();
        axis_angle([r * phi.cos(), r * phi.sin(), z], angle)
    })
}

fn arb_shift() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-500.0f64..500.0)
}

fn arb_similarity() -> impl Strategy<Value = Similarity> {
    (arb_rotation(), 0.05f64..20.0, arb_shift()).prop_map(|(rotation, scale, shift)| Similarity { rotation, scale, shift })
}

fn arb_hand() -> impl Strategy<Value = HandPose> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, left)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = if left { Handedness::Left } else { Handedness::Right };
        HandPose::new(synthetic_hand(&mut rng), side).unwrap()
    })
}

fn max_diff(a: &HandPose, b: &HandPose) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .flat_map(|(p, q)| (0..3).map(move |k| (p[k] - q[k]).abs()))
        .fold(0.0, f64::max)
}

fn small_header(points: usize) -> PoseHeader {
    PoseHeader::new(
        25.0,
        vec![Component::new("A", (0..points).map(|i| format!("P{i}")).collect())],
    )
    .unwrap()
}

fn arb_sequence() -> impl Strategy<Value = PoseSequence> {
    (1usize..5, 0usize..12).prop_flat_map(|(k, t)| {
        (
            prop::collection::vec(prop::array::uniform3(-1e3f64..1e3), k * t),
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..=1.0], k * t),
        )
            .prop_map(move |(coords, conf)| PoseSequence::new(small_header(k), t, coords, conf).unwrap())
    })
}

fn map_coords(seq: &PoseSequence, f: impl Fn(Vec3) -> Vec3) -> PoseSequence {
    PoseSequence::new(
        seq.header().clone(),
        seq.num_frames(),
        seq.coords().iter().map(|&p| f(p)).collect(),
        seq.confidences().to_vec(),
    )
    .unwrap()
}

fn sample(seed: u64, frames: usize) -> PoseSequence {
    synthetic_sample(frames, 25.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().pose
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pose_file_round_trips(seq in arb_sequence()) {
        let bytes = serialize_pose_file(&seq).unwrap();
        let parsed = parse_pose_file(&bytes).unwrap();
        prop_assert_eq!(&parsed, &seq);
        prop_assert_eq!(serialize_pose_file(&parsed).unwrap(), bytes);
    }

    #[test]
    fn normalized_shoulders_are_unit_and_centered(seed in any::<u64>()) {
        let out = normalize_pose(&sample(seed, 12)).unwrap();
        let l = out.header().point_index(BODY, LEFT_SHOULDER).unwrap();
        let r = out.header().point_index(BODY, RIGHT_SHOULDER).unwrap();
        let (mut w_sum, mut dist, mut mid) = (0.0, 0.0, [0.0; 3]);
        for t in 0..out.num_frames() {
            let w = out.confidence(t, l) * out.confidence(t, r);
            let (a, b) = (out.point(t, l), out.point(t, r));
            w_sum += w;
            dist += w * signseg::geometry::distance(a, b);
            for k in 0..3 {
                mid[k] += w * 0.5 * (a[k] + b[k]);
            }
        }
        prop_assert!((dist / w_sum - 1.0).abs() < 1e-9);
        prop_assert!(mid.iter().all(|m| (m / w_sum).abs() < 1e-9));
    }

    #[test]
    fn normalization_ignores_translation_and_scale(seed in any::<u64>(), s in 0.05f64..20.0, shift in arb_shift()) {
        let seq = sample(seed, 8);
        let moved = map_coords(&seq, |p| [0, 1, 2].map(|a| s * p[a] + shift[a]));
        let (a, b) = (normalize_pose(&seq).unwrap(), normalize_pose(&moved).unwrap());
        let diff = a.coords().iter().zip(b.coords()).flat_map(|(p, q)| (0..3).map(move |k| (p[k] - q[k]).abs())).fold(0.0, f64::max);
        prop_assert!(diff < 1e-9, "{}", diff);
        prop_assert_eq!(a.confidences(), b.confidences());
    }

    #[test]
    fn selection_keeps_frames_and_coordinates(seed in any::<u64>(), picks in prop::collection::btree_set(0usize..33, 1..10)) {
        let seq = sample(seed, 6);
        let names: Vec<&str> = picks.iter().rev().map(|&i| HOLISTIC_BODY_POINTS[i]).collect();
        let out = select_points(&seq, &PointSelector::named(BODY, &names)).unwrap();
        prop_assert_eq!(out.num_frames(), seq.num_frames());
        for (j, name) in names.iter().enumerate() {
            let src = seq.header().point_index(BODY, name).unwrap();
            for t in 0..seq.num_frames() {
                prop_assert_eq!(out.point(t, j), seq.point(t, src));
                prop_assert_eq!(out.confidence(t, j), seq.confidence(t, src));
            }
        }
    }

    #[test]
    fn flow_follows_translation_and_scale(seq in arb_sequence(), s in 0.05f64..20.0, shift in arb_shift()) {
        let base = optical_flow(&seq);
        let moved = optical_flow(&map_coords(&seq, |p| [0, 1, 2].map(|a| s * p[a] + shift[a])));
        prop_assert_eq!(&base.mask, &moved.mask);
        for (a, b) in base.values.iter().zip(&moved.values) {
            prop_assert!((s * a - b).abs() <= 1e-9 * (s * a).abs().max(1.0), "{} vs {}", s * a, b);
        }
    }

    #[test]
    fn doubling_fps_doubles_flow_at_boundaries(seq in arb_sequence()) {
        let up = resample_fps(&seq, 2.0 * seq.fps()).unwrap();
        let (base, fine) = (optical_flow(&seq), optical_flow(&up));
        prop_assert_eq!(up.num_frames(), 2 * seq.num_frames());
        for t in 0..seq.num_frames() {
            for p in 0..seq.num_points() {
                prop_assert_eq!(fine.get(2 * t + 1, p), 0.0);
                prop_assert_eq!(fine.get(2 * t, p), 2.0 * base.get(t, p));
            }
        }
    }

    #[test]
    fn hand_normalization_is_idempotent_and_invariant(hand in arb_hand(), sim in arb_similarity()) {
        let reference = hand_normalize(&hand).unwrap();
        let again = hand_normalize(&HandPose { handedness: Handedness::Right, ..reference.clone() }).unwrap();
        prop_assert!(max_diff(&again, &reference) < 1e-6);
        let moved = hand_normalize(&hand.map(|p| sim.apply(p))).unwrap();
        prop_assert!(max_diff(&moved, &reference) < 1e-6, "{}", max_diff(&moved, &reference));
    }

    #[test]
    fn mace_ignores_member_transforms(hands in prop::collection::vec(arb_hand(), 2..5), sims in prop::collection::vec(arb_similarity(), 5)) {
        let hands: Vec<HandPose> = hands.into_iter().map(|h| HandPose { handedness: Handedness::Right, ..h }).collect();
        let moved: Vec<HandPose> = hands.iter().zip(&sims).map(|(h, s)| h.map(|p| s.apply(p))).collect();
        let a = mace(&HandGroup { label: "a".into(), members: hands }).unwrap();
        let b = mace(&HandGroup { label: "b".into(), members: moved }).unwrap();
        prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn cce_ignores_translation_but_not_scale(hands in prop::collection::vec(arb_hand(), 2..5), shifts in prop::collection::vec(arb_shift(), 5), s in 1.5f64..4.0) {
        let group = |members| HandGroup { label: "g".into(), members };
        let base = cce(&group(hands.clone())).unwrap();
        let moved: Vec<HandPose> = hands.iter().zip(&shifts).map(|(h, d)| h.map(|p| [0, 1, 2].map(|a| p[a] + d[a]))).collect();
        prop_assert!((cce(&group(moved)).unwrap() - base).abs() < 1e-9);
        let same = vec![hands[0].clone(), hands[0].clone()];
        let scaled = vec![hands[0].clone(), hands[0].map(|p| p.map(|v| s * v))];
        prop_assert!(cce(&group(same)).unwrap() < 1e-12);
        prop_assert!(cce(&group(scaled)).unwrap() > 0.01);
    }

    #[test]
    fn hand_estimates_ignore_translation_and_scale(hand in arb_hand(), rotation in arb_rotation(), s in 0.05f64..20.0, shift in arb_shift()) {
        let posed = hand.map(|p| apply(&rotation, p));
        let moved = posed.map(|p| [0, 1, 2].map(|a| s * p[a] + shift[a]));
        prop_assert_eq!(estimate_plane(&posed), estimate_plane(&moved));
        prop_assert_eq!(estimate_view(&posed).unwrap(), estimate_view(&moved).unwrap());
        prop_assert_eq!(estimate_rotation(&posed).unwrap(), estimate_rotation(&moved).unwrap());
    }

    #[test]
    fn feature_width_matches_layout(seed in any::<u64>(), flow in any::<bool>(), hands in any::<bool>()) {
        let seq = sample(seed, 5);
        let options = FeatureOptions { include_flow: flow, include_hand_norm: hands };
        let x = assemble_features(&seq, options).unwrap();
        let expected = FeatureLayout::for_points(seq.num_points(), options).width();
        prop_assert_eq!(x.width, expected);
        prop_assert_eq!(x.layout.width(), expected);
        prop_assert_eq!(x.values.len(), 5 * expected);
        prop_assert_eq!(NUM_HAND_POINTS * 6 * hands as usize + seq.num_points() * (3 + flow as usize), expected);
    }
}
