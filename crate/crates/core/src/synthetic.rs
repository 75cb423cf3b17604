//! Synthetic data: signing-like pose sequences with gold segments, segment
//! corpora, decoder fixtures and hand shapes.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::Result;
use crate::geometry::{add, scale, Vec3};
use crate::hand::NUM_HAND_POINTS;
use crate::pose::{holistic_header, PoseSequence, BODY, FACE, HOLISTIC_FACE_POINTS, LEFT_HAND, RIGHT_HAND};
use crate::tags::{encode_tags, Scheme, Segment, Tag, Tier};
use crate::tune::DevItem;

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub pose: PoseSequence,
    pub sign: Vec<Segment>,
    pub phrase: Vec<Segment>,
}

/// Gold segments for `num_frames` frames: phrases of one to three signs
/// (5–12 frames each) separated by 1–3 frame holds, with 6–12 frame rests
/// between phrases.
pub fn synthetic_gold<R: Rng>(num_frames: usize, rng: &mut R) -> (Vec<Segment>, Vec<Segment>) {
    let mut sign = Vec::new();
    let mut phrase = Vec::new();
    let mut t = rng.random_range(3..=8);
    loop {
        let signs = rng.random_range(1..=3);
        let start = t;
        let mut placed = 0;
        for k in 0..signs {
            let hold = if k == 0 { 0 } else { rng.random_range(1..=3) };
            let len = rng.random_range(5..=12);
            if t + hold + len + 2 > num_frames {
                break;
            }
            t += hold;
            sign.push(Segment::new(t, t + len, Tier::Sign));
            t += len;
            placed += 1;
        }
        if placed == 0 {
            break;
        }
        phrase.push(Segment::new(start, t, Tier::Phrase));
        t += rng.random_range(6..=12);
        if t >= num_frames {
            break;
        }
    }
    (sign, phrase)
}

const LEFT_SHOULDER_POS: Vec3 = [0.62, 0.50, 0.0];
const RIGHT_SHOULDER_POS: Vec3 = [0.38, 0.50, 0.0];
const LEFT_REST: Vec3 = [0.60, 0.92, -0.02];
const RIGHT_REST: Vec3 = [0.40, 0.92, -0.02];

/// A hand in image units: the canonical shape scaled down and turned by
/// `angle` in the image plane, mirrored for the left hand.
fn place_hand(shape: &[Vec3; NUM_HAND_POINTS], wrist: Vec3, angle: f64, left: bool) -> [Vec3; NUM_HAND_POINTS] {
    let (s, c) = angle.sin_cos();
    shape.map(|p| {
        let x = if left { -p[0] } else { p[0] };
        // canonical +y (towards the fingers) points up in the image
        let (u, v) = (x, -p[1]);
        add(wrist, scale([c * u - s * v, s * u + c * v, p[2]], 0.0004))
    })
}

/// Wrist trajectories: still outside signs, an eased stroke towards a random
/// target during each sign, and a slow descent to the rest pose between phrases.
fn wrist_paths<R: Rng>(
    num_frames: usize,
    sign: &[Segment],
    phrase: &[Segment],
    rng: &mut R,
) -> (Vec<[Vec3; 2]>, Vec<f64>) {
    let mut pos = vec![[LEFT_REST, RIGHT_REST]; num_frames];
    let mut angle = vec![0.0; num_frames];
    let mut cur = [LEFT_REST, RIGHT_REST];
    let mut cur_angle = 0.0;
    let mut next_sign = 0;
    let mut f = 0;
    while f < num_frames {
        if let Some(s) = sign.get(next_sign).filter(|s| s.start == f) {
            let right_target = [rng.random_range(0.35..0.6), rng.random_range(0.4..0.65), rng.random_range(-0.15..-0.05)];
            let left_target = [
                right_target[0] + rng.random_range(0.1..0.2),
                right_target[1] + rng.random_range(-0.05..0.1),
                right_target[2] * 0.5,
            ];
            let target_angle = rng.random_range(-0.8..0.8);
            let from = cur;
            let from_angle = cur_angle;
            let len = s.len() as f64;
            let radius = rng.random_range(0.08..0.14);
            let turns = rng.random_range(1.0..1.5);
            for k in 0..s.len() {
                let u = (k + 1) as f64 / len;
                let theta = std::f64::consts::TAU * turns * u;
                let circle = [radius * (theta.cos() - 1.0), radius * theta.sin(), 0.0];
                let lerp = |a: Vec3, b: Vec3| add(a, scale([b[0] - a[0], b[1] - a[1], b[2] - a[2]], u));
                cur = [add(lerp(from[0], left_target), circle), add(lerp(from[1], right_target), circle)];
                cur_angle = from_angle + (target_angle - from_angle) * u;
                pos[s.start + k] = cur;
                angle[s.start + k] = cur_angle;
            }
            f = s.end;
            next_sign += 1;
            continue;
        }
        let in_phrase = phrase.iter().any(|p| p.start <= f && f < p.end);
        if !in_phrase {
            // slow descent spread over the whole rest
            let rest_end = phrase.iter().find(|p| p.start > f).map_or(num_frames, |p| p.start);
            let span = rest_end - f;
            let from = cur;
            let from_angle = cur_angle;
            for k in 0..(rest_end - f) {
                let u = ((k + 1) as f64 / span as f64).min(1.0);
                let lerp = |a: Vec3, b: Vec3| add(a, scale([b[0] - a[0], b[1] - a[1], b[2] - a[2]], u));
                cur = [lerp(from[0], LEFT_REST), lerp(from[1], RIGHT_REST)];
                cur_angle = from_angle * (1.0 - u);
                pos[f + k] = cur;
                angle[f + k] = cur_angle;
            }
            f = rest_end;
            continue;
        }
        pos[f] = cur;
        angle[f] = cur_angle;
        f += 1;
    }
    (pos, angle)
}

/// A holistic pose sequence whose hands move exactly during the gold signs.
pub fn synthetic_sample<R: Rng>(num_frames: usize, fps: f64, rng: &mut R) -> Result<SyntheticSample> {
    let (sign, phrase) = synthetic_gold(num_frames, rng);
    let header = holistic_header(fps)?;
    let left_shape = synthetic_hand(rng);
    let right_shape = synthetic_hand(rng);
    let (wrists, angles) = wrist_paths(num_frames, &sign, &phrase, rng);

    let body_off = header.component_offset(BODY).unwrap_or(0);
    let face_off = header.component_offset(FACE).unwrap_or(0);
    let lh_off = header.component_offset(LEFT_HAND).unwrap_or(0);
    let rh_off = header.component_offset(RIGHT_HAND).unwrap_or(0);
    let k = header.num_points();

    let mut coords = vec![[0.0; 3]; num_frames * k];
    for f in 0..num_frames {
        let frame = &mut coords[f * k..(f + 1) * k];
        let [lw, rw] = wrists[f];
        let lh = place_hand(&left_shape, lw, -angles[f], true);
        let rh = place_hand(&right_shape, rw, angles[f], false);
        frame[lh_off..lh_off + NUM_HAND_POINTS].copy_from_slice(&lh);
        frame[rh_off..rh_off + NUM_HAND_POINTS].copy_from_slice(&rh);

        let elbow = |shoulder: Vec3, wrist: Vec3, out: f64| {
            [
                0.5 * (shoulder[0] + wrist[0]) + out,
                0.5 * (shoulder[1] + wrist[1]) + 0.08,
                0.5 * wrist[2],
            ]
        };
        let body: [Vec3; 33] = [
            [0.50, 0.30, -0.05],
            [0.52, 0.28, -0.04],
            [0.53, 0.28, -0.04],
            [0.54, 0.28, -0.04],
            [0.48, 0.28, -0.04],
            [0.47, 0.28, -0.04],
            [0.46, 0.28, -0.04],
            [0.56, 0.29, 0.0],
            [0.44, 0.29, 0.0],
            [0.52, 0.34, -0.04],
            [0.48, 0.34, -0.04],
            LEFT_SHOULDER_POS,
            RIGHT_SHOULDER_POS,
            elbow(LEFT_SHOULDER_POS, lw, 0.06),
            elbow(RIGHT_SHOULDER_POS, rw, -0.06),
            lw,
            rw,
            lh[17],
            rh[17],
            lh[5],
            rh[5],
            lh[4],
            rh[4],
            [0.58, 0.95, 0.0],
            [0.42, 0.95, 0.0],
            [0.58, 1.25, 0.0],
            [0.42, 1.25, 0.0],
            [0.58, 1.55, 0.0],
            [0.42, 1.55, 0.0],
            [0.58, 1.58, 0.0],
            [0.42, 1.58, 0.0],
            [0.59, 1.60, -0.03],
            [0.41, 1.60, -0.03],
        ];
        frame[body_off..body_off + 33].copy_from_slice(&body);
        for i in 0..HOLISTIC_FACE_POINTS {
            let a = i as f64 * 2.399_963;
            let r = 0.07 * ((i as f64 + 0.5) / HOLISTIC_FACE_POINTS as f64).sqrt();
            frame[face_off + i] = [0.50 + r * a.cos(), 0.29 + 1.3 * r * a.sin(), -0.05 + 0.02 * a.cos()];
        }
    }
    let pose = PoseSequence::new(header, num_frames, coords, vec![1.0; num_frames * k])?;
    Ok(SyntheticSample { pose, sign, phrase })
}

/// A 21-point hand with its wrist at the origin, fingers along +y and the
/// palm facing +z, with random finger lengths, splay and curl.
pub fn synthetic_hand<R: Rng>(rng: &mut R) -> [Vec3; NUM_HAND_POINTS] {
    let mut pts = [[0.0; 3]; NUM_HAND_POINTS];
    // thumb, index, middle, ring, pinky
    let bases = [[55.0, 60.0], [25.0, 190.0], [0.0, 200.0], [-22.0, 190.0], [-42.0, 170.0]];
    let lengths = [[45.0, 35.0, 30.0], [50.0, 30.0, 25.0], [55.0, 35.0, 25.0], [50.0, 32.0, 24.0], [40.0, 25.0, 20.0]];
    let splay = [0.9, 0.15, 0.0, -0.12, -0.25];
    for finger in 0..5 {
        let mcp = 1 + 4 * finger;
        let jitter = |rng: &mut R| rng.random_range(-6.0..6.0);
        let mut p = [bases[finger][0] + jitter(rng), bases[finger][1] + jitter(rng), rng.random_range(-5.0..5.0)];
        pts[mcp] = p;
        let side: f64 = splay[finger] + rng.random_range(-0.15..0.15);
        let mut bend: f64 = 0.0;
        let curl: f64 = rng.random_range(0.0..0.9);
        for j in 0..3 {
            bend += curl;
            let len = lengths[finger][j] * rng.random_range(0.85..1.15);
            let dir = [side.sin() * bend.cos(), side.cos() * bend.cos(), bend.sin()];
            p = add(p, scale(dir, len));
            pts[mcp + j + 1] = p;
        }
    }
    pts
}

/// Back-to-back segments at `1..=60` frame lengths with 1–25 frame gaps,
/// where exactly `round(count · adjacency_rate)` segments start where the
/// previous one ends.
pub fn segment_corpus<R: Rng>(count: usize, adjacency_rate: f64, tier: Tier, rng: &mut R) -> Vec<Segment> {
    let adjacent = ((count.saturating_sub(1)) as f64)
        .min((count as f64 * adjacency_rate).round()) as usize;
    let mut touching = vec![false; count];
    if count > 1 {
        for i in sample(rng, count - 1, adjacent) {
            touching[i + 1] = true;
        }
    }
    let mut t = rng.random_range(0..10);
    let mut out = Vec::with_capacity(count);
    for &touch in &touching {
        if !touch && !out.is_empty() {
            t += rng.random_range(1..=25);
        }
        let len = rng.random_range(1..=60);
        out.push(Segment::new(t, t + len, tier));
        t += len;
    }
    out
}

/// Development sequences whose inside frames carry two-frame B bumps at
/// 75: the default thresholds split every such segment, while any
/// `threshold_b` of at least 80 decodes the gold exactly.
pub fn oversegmenting_dev_set<R: Rng>(sequences: usize, rng: &mut R) -> Vec<DevItem> {
    (0..sequences)
        .map(|_| {
            let num_frames = rng.random_range(120..200);
            let mut gold = Vec::new();
            let mut t = rng.random_range(2..8);
            loop {
                let len = rng.random_range(8..=20);
                if t + len + 2 > num_frames {
                    break;
                }
                gold.push(Segment::new(t, t + len, Tier::Phrase));
                t += len + rng.random_range(3..=10);
            }
            let tags = encode_tags(&gold, num_frames, Tier::Phrase, 25.0, Scheme::Bio)
                .map(|t| t.tags)
                .unwrap_or_default();
            let mut rows: Vec<[f64; 3]> = tags
                .iter()
                .map(|t| {
                    let n = rng.random_range(0.0..4.0);
                    match t {
                        Tag::B => [95.0 - n, 3.0 + n, 2.0],
                        Tag::I => [5.0 + n, 90.0 - n, 5.0],
                        Tag::O => [2.0, 5.0 + n, 93.0 - n],
                    }
                })
                .collect();
            for g in &gold {
                if g.len() >= 6 {
                    let k = g.start + rng.random_range(2..g.len() - 3);
                    rows[k] = [75.0, 20.0, 5.0];
                    rows[k + 1] = [75.0, 20.0, 5.0];
                }
            }
            DevItem { rows, gold }
        })
        .collect()
}
