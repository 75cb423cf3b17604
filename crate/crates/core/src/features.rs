//! Per-keypoint optical flow and the per-frame feature matrix fed to the tagger.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::hand::{self, Handedness, HandPose, NUM_HAND_POINTS};
use crate::pose::{normalize_pose, resample_fps, select_points, PointSelector, PoseSequence, LEFT_HAND, RIGHT_HAND};

/// Motion magnitude per point and frame, in pose units per second.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub num_frames: usize,
    pub num_points: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl FlowMatrix {
    pub fn get(&self, frame: usize, point: usize) -> f64 {
        self.values[frame * self.num_points + point]
    }

    pub fn is_valid(&self, frame: usize, point: usize) -> bool {
        self.mask[frame * self.num_points + point]
    }
}

/// `‖p(t) − p(t−1)‖ · fps` for points tracked in both frames, 0 elsewhere
/// and on the first frame.
pub fn optical_flow(seq: &PoseSequence) -> FlowMatrix {
    let t = seq.num_frames();
    let k = seq.num_points();
    let fps = seq.fps();
    let mut values = vec![0.0; t * k];
    let mut mask = vec![false; t * k];
    for frame in 1..t {
        let prev = seq.frame_points(frame - 1);
        let cur = seq.frame_points(frame);
        let prev_c = seq.frame_confidence(frame - 1);
        let cur_c = seq.frame_confidence(frame);
        for p in 0..k {
            if prev_c[p] > 0.0 && cur_c[p] > 0.0 {
                values[frame * k + p] = geometry::distance(cur[p], prev[p]) * fps;
                mask[frame * k + p] = true;
            }
        }
    }
    FlowMatrix {
        num_frames: t,
        num_points: k,
        values,
        mask,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureOptions {
    pub include_flow: bool,
    pub include_hand_norm: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureBlock {
    /// x, y, z per point, followed by flow when `with_flow`.
    Points { count: usize, with_flow: bool },
    /// Normalized left then right hand, 21 x 3 coordinates each.
    NormalizedHands,
    /// Opaque columns supplied directly by the caller.
    Raw { width: usize },
}

impl FeatureBlock {
    pub fn width(&self) -> usize {
        match *self {
            FeatureBlock::Points { count, with_flow } => count * if with_flow { 4 } else { 3 },
            FeatureBlock::NormalizedHands => 2 * NUM_HAND_POINTS * 3,
            FeatureBlock::Raw { width } => width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub blocks: Vec<FeatureBlock>,
}

impl FeatureLayout {
    pub fn width(&self) -> usize {
        self.blocks.iter().map(FeatureBlock::width).sum()
    }

    pub fn for_points(num_points: usize, options: FeatureOptions) -> Self {
        let mut blocks = vec![FeatureBlock::Points {
            count: num_points,
            with_flow: options.include_flow,
        }];
        if options.include_hand_norm {
            blocks.push(FeatureBlock::NormalizedHands);
        }
        FeatureLayout { blocks }
    }
}

/// Row-major `num_frames × width` features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub num_frames: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

impl FeatureMatrix {
    pub fn new(num_frames: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_frames * width {
            return Err(Error::Dimension(format!(
                "{} values for {num_frames} x {width} features",
                values.len()
            )));
        }
        Ok(FeatureMatrix {
            num_frames,
            width,
            values,
            layout: FeatureLayout {
                blocks: vec![FeatureBlock::Raw { width }],
            },
        })
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        &self.values[frame * self.width..(frame + 1) * self.width]
    }

    /// The frames in reverse order.
    pub fn reversed(&self) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for t in (0..self.num_frames).rev() {
            values.extend_from_slice(self.row(t));
        }
        FeatureMatrix {
            values,
            ..self.clone()
        }
    }
}

/// Flattens a (normalized, selected) pose sequence into tagger features.
///
/// Missing points contribute zeros. A hand that is missing or cannot be
/// normalized in a frame contributes zeros to the hand block.
pub fn assemble_features(seq: &PoseSequence, options: FeatureOptions) -> Result<FeatureMatrix> {
    let hands = if options.include_hand_norm {
        let mut found = Vec::with_capacity(2);
        for (name, side) in [(LEFT_HAND, Handedness::Left), (RIGHT_HAND, Handedness::Right)] {
            match seq.header().component(name) {
                Some(c) if c.points.len() == NUM_HAND_POINTS => found.push((name, side)),
                _ => {
                    return Err(Error::Dimension(format!(
                        "hand normalization needs a {NUM_HAND_POINTS}-point {name} component"
                    )))
                }
            }
        }
        found
    } else {
        Vec::new()
    };

    let layout = FeatureLayout::for_points(seq.num_points(), options);
    let width = layout.width();
    let t = seq.num_frames();
    let k = seq.num_points();
    let flow = options.include_flow.then(|| optical_flow(seq));
    let mut values = Vec::with_capacity(t * width);
    for frame in 0..t {
        let points = seq.frame_points(frame);
        let conf = seq.frame_confidence(frame);
        for p in 0..k {
            if conf[p] > 0.0 {
                values.extend_from_slice(&points[p]);
            } else {
                values.extend_from_slice(&[0.0; 3]);
            }
            if let Some(flow) = &flow {
                values.push(flow.get(frame, p));
            }
        }
        for &(name, side) in &hands {
            let normalized = HandPose::from_frame(seq, frame, name, side)
                .and_then(|h| hand::hand_normalize(&h).ok());
            match normalized {
                Some(h) => values.extend(h.points.iter().flatten().copied()),
                None => values.extend(std::iter::repeat_n(0.0, NUM_HAND_POINTS * 3)),
            }
        }
    }
    debug_assert_eq!(values.len(), t * width);
    Ok(FeatureMatrix {
        num_frames: t,
        width,
        values,
        layout,
    })
}

/// Resample to `fps`, normalize, select points and assemble features.
pub fn pose_features(
    seq: &PoseSequence,
    fps: f64,
    selector: &PointSelector,
    options: FeatureOptions,
) -> Result<FeatureMatrix> {
    let seq = resample_fps(seq, fps)?;
    let seq = normalize_pose(&seq)?;
    let seq = select_points(&seq, selector)?;
    assemble_features(&seq, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{holistic_header, select_points, Component, PoseHeader, PointSelector};

    fn moving_point(frames: usize, step: f64, fps: f64) -> PoseSequence {
        let header = PoseHeader::new(fps, vec![Component::new("BODY", vec!["P".into()])]).unwrap();
        let coords = (0..frames).map(|t| [t as f64 * step, 0.0, 0.0]).collect();
        PoseSequence::new(header, frames, coords, vec![1.0; frames]).unwrap()
    }

    #[test]
    fn static_sequence_has_zero_flow() {
        let seq = moving_point(6, 0.0, 25.0);
        let flow = optical_flow(&seq);
        assert!(flow.values.iter().all(|&v| v == 0.0));
        assert!(!flow.is_valid(0, 0));
        assert!(flow.is_valid(1, 0));
    }

    #[test]
    fn constant_velocity_flow() {
        let seq = moving_point(5, 0.1, 25.0);
        let flow = optical_flow(&seq);
        assert_eq!(flow.get(0, 0), 0.0);
        for t in 1..5 {
            assert!((flow.get(t, 0) - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_point_masks_two_frames() {
        let header = PoseHeader::new(25.0, vec![Component::new("BODY", vec!["P".into()])]).unwrap();
        let coords = (0..5).map(|t| [t as f64, 0.0, 0.0]).collect();
        let seq = PoseSequence::new(header, 5, coords, vec![1.0, 1.0, 0.0, 1.0, 1.0]).unwrap();
        let flow = optical_flow(&seq);
        assert_eq!(flow.get(2, 0), 0.0);
        assert_eq!(flow.get(3, 0), 0.0);
        assert!(!flow.is_valid(2, 0) && !flow.is_valid(3, 0));
        assert_eq!(flow.get(4, 0), 25.0);
    }

    #[test]
    fn widths_for_body75() {
        let seq = select_points(&PoseSequence::empty(holistic_header(25.0).unwrap()), &PointSelector::body75()).unwrap();
        let width = |flow, hands| {
            assemble_features(&seq, FeatureOptions { include_flow: flow, include_hand_norm: hands })
                .unwrap()
                .width
        };
        assert_eq!(width(false, false), 225);
        assert_eq!(width(true, false), 300);
        assert_eq!(width(true, true), 426);
        assert_eq!(width(false, true), 225 + 126);
    }

    #[test]
    fn hand_norm_requires_hands() {
        let seq = moving_point(3, 0.1, 25.0);
        let err = assemble_features(&seq, FeatureOptions { include_flow: false, include_hand_norm: true });
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn missing_points_are_zero_filled() {
        let header = PoseHeader::new(25.0, vec![Component::new("BODY", vec!["P".into(), "Q".into()])]).unwrap();
        let seq = PoseSequence::new(header, 1, vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], vec![1.0, 0.0]).unwrap();
        let f = assemble_features(&seq, FeatureOptions { include_flow: true, include_hand_norm: false }).unwrap();
        assert_eq!(f.values, vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
