//! Pose sequences: the in-memory model, the `poseseq-json/1` file format,
//! frame-rate adjustment, shoulder-based normalization and point selection.
//!
//! Coordinates follow the screen convention of common pose estimators:
//! x grows to the right, y grows downward and z points toward the camera.
//! A point with confidence 0 is missing; its coordinates are kept at
//! (0, 0, 0) by every transform in this module and must be ignored by
//! consumers.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::round_half_away;

pub const FORMAT_VERSION: &str = "poseseq-json/1";

pub const BODY: &str = "BODY";
pub const LEFT_HAND: &str = "LEFT_HAND_LANDMARKS";
pub const RIGHT_HAND: &str = "RIGHT_HAND_LANDMARKS";
pub const FACE: &str = "FACE_LANDMARKS";

pub const LEFT_SHOULDER: &str = "LEFT_SHOULDER";
pub const RIGHT_SHOULDER: &str = "RIGHT_SHOULDER";

/// Name fragments identifying leg points of the BODY component.
pub const LEG_MARKERS: [&str; 5] = ["HIP", "KNEE", "ANKLE", "HEEL", "FOOT_INDEX"];

/// The 33 full-body landmarks of a holistic estimator, in output order.
pub const HOLISTIC_BODY_POINTS: [&str; 33] = [
    "NOSE",
    "LEFT_EYE_INNER",
    "LEFT_EYE",
    "LEFT_EYE_OUTER",
    "RIGHT_EYE_INNER",
    "RIGHT_EYE",
    "RIGHT_EYE_OUTER",
    "LEFT_EAR",
    "RIGHT_EAR",
    "MOUTH_LEFT",
    "MOUTH_RIGHT",
    "LEFT_SHOULDER",
    "RIGHT_SHOULDER",
    "LEFT_ELBOW",
    "RIGHT_ELBOW",
    "LEFT_WRIST",
    "RIGHT_WRIST",
    "LEFT_PINKY",
    "RIGHT_PINKY",
    "LEFT_INDEX",
    "RIGHT_INDEX",
    "LEFT_THUMB",
    "RIGHT_THUMB",
    "LEFT_HIP",
    "RIGHT_HIP",
    "LEFT_KNEE",
    "RIGHT_KNEE",
    "LEFT_ANKLE",
    "RIGHT_ANKLE",
    "LEFT_HEEL",
    "RIGHT_HEEL",
    "LEFT_FOOT_INDEX",
    "RIGHT_FOOT_INDEX",
];

/// Number of dense face-mesh landmarks produced by a holistic estimator.
pub const HOLISTIC_FACE_POINTS: usize = 468;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub points: Vec<String>,
}

impl Component {
    pub fn new<S: Into<String>>(name: S, points: Vec<String>) -> Self {
        Component {
            name: name.into(),
            points,
        }
    }
}

/// Frame rate and skeleton layout of a pose sequence. Every point has three axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseHeader {
    pub version: String,
    pub fps: f64,
    pub components: Vec<Component>,
}

impl PoseHeader {
    pub fn new(fps: f64, components: Vec<Component>) -> Result<Self> {
        let header = PoseHeader {
            version: FORMAT_VERSION.to_string(),
            fps,
            components,
        };
        header.validate()?;
        Ok(header)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidValue(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        let mut names = HashSet::new();
        for component in &self.components {
            if !names.insert(component.name.as_str()) {
                return Err(Error::Malformed(format!(
                    "duplicate component name {:?}",
                    component.name
                )));
            }
            let mut points = HashSet::new();
            for point in &component.points {
                if !points.insert(point.as_str()) {
                    return Err(Error::Malformed(format!(
                        "duplicate point {:?} in component {:?}",
                        point, component.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total number of points across all components.
    pub fn num_points(&self) -> usize {
        self.components.iter().map(|c| c.points.len()).sum()
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    /// Offset of the first point of `name` in the flattened point list.
    pub fn component_offset(&self, name: &str) -> Option<usize> {
        let mut offset = 0;
        for c in &self.components {
            if c.name == name {
                return Some(offset);
            }
            offset += c.points.len();
        }
        None
    }

    /// Flattened index of a named point.
    pub fn point_index(&self, component: &str, point: &str) -> Option<usize> {
        let offset = self.component_offset(component)?;
        let c = self.component(component)?;
        c.points.iter().position(|p| p == point).map(|i| offset + i)
    }
}

/// A timed sequence of skeleton frames with per-point confidence.
///
/// Storage is frame-major: point `k` of frame `t` lives at `t * K + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSequence {
    header: PoseHeader,
    num_frames: usize,
    coords: Vec<[f64; 3]>,
    confidence: Vec<f64>,
}

impl PoseSequence {
    pub fn new(
        header: PoseHeader,
        num_frames: usize,
        coords: Vec<[f64; 3]>,
        confidence: Vec<f64>,
    ) -> Result<Self> {
        header.validate()?;
        let k = header.num_points();
        if coords.len() != num_frames * k || confidence.len() != num_frames * k {
            return Err(Error::Dimension(format!(
                "expected {} frames x {} points = {} entries, got {} coordinates and {} confidences",
                num_frames,
                k,
                num_frames * k,
                coords.len(),
                confidence.len()
            )));
        }
        if let Some(c) = confidence.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidValue(format!(
                "confidence {c} outside [0, 1]"
            )));
        }
        Ok(PoseSequence {
            header,
            num_frames,
            coords,
            confidence,
        })
    }

    pub fn empty(header: PoseHeader) -> Self {
        PoseSequence {
            header,
            num_frames: 0,
            coords: Vec::new(),
            confidence: Vec::new(),
        }
    }

    pub fn header(&self) -> &PoseHeader {
        &self.header
    }

    pub fn fps(&self) -> f64 {
        self.header.fps
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_points(&self) -> usize {
        self.header.num_points()
    }

    pub fn point(&self, frame: usize, point: usize) -> [f64; 3] {
        self.coords[frame * self.num_points() + point]
    }

    pub fn confidence(&self, frame: usize, point: usize) -> f64 {
        self.confidence[frame * self.num_points() + point]
    }

    pub fn is_present(&self, frame: usize, point: usize) -> bool {
        self.confidence(frame, point) > 0.0
    }

    pub fn frame_points(&self, frame: usize) -> &[[f64; 3]] {
        let k = self.num_points();
        &self.coords[frame * k..(frame + 1) * k]
    }

    pub fn frame_confidence(&self, frame: usize) -> &[f64] {
        let k = self.num_points();
        &self.confidence[frame * k..(frame + 1) * k]
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn confidences(&self) -> &[f64] {
        &self.confidence
    }
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    version: String,
    fps: f64,
    components: Vec<Component>,
    frames: Vec<Vec<Vec<f64>>>,
}

/// Parses a `poseseq-json/1` document.
pub fn parse_pose_file(bytes: &[u8]) -> Result<PoseSequence> {
    let raw: RawPose =
        serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
    if raw.version != FORMAT_VERSION {
        return Err(Error::Malformed(format!(
            "unsupported version {:?}, expected {:?}",
            raw.version, FORMAT_VERSION
        )));
    }
    let header = PoseHeader {
        version: raw.version,
        fps: raw.fps,
        components: raw.components,
    };
    header.validate()?;
    let k = header.num_points();
    let t = raw.frames.len();
    let mut coords = Vec::with_capacity(t * k);
    let mut confidence = Vec::with_capacity(t * k);
    for (ti, frame) in raw.frames.iter().enumerate() {
        if frame.len() != k {
            return Err(Error::Dimension(format!(
                "frame {ti} has {} points, header declares {k}",
                frame.len()
            )));
        }
        for (ki, p) in frame.iter().enumerate() {
            match p.len() {
                4 => {
                    coords.push([p[0], p[1], p[2]]);
                    confidence.push(p[3]);
                }
                3 => {
                    return Err(Error::MissingZAxis(format!(
                        "frame {ti} point {ki} has [x, y, confidence]; 3D input with [x, y, z, confidence] is required"
                    )))
                }
                n => {
                    return Err(Error::Malformed(format!(
                        "frame {ti} point {ki} has {n} values, expected [x, y, z, confidence]"
                    )))
                }
            }
        }
    }
    PoseSequence::new(header, t, coords, confidence)
}

/// Renders a sequence as a compact `poseseq-json/1` document.
///
/// Numbers are written in shortest round-trip form, so parsing the output
/// reproduces the sequence bit for bit.
pub fn serialize_pose_file(seq: &PoseSequence) -> Result<Vec<u8>> {
    if !seq.header.fps.is_finite() {
        return Err(Error::InvalidValue("fps is not finite".into()));
    }
    if let Some(i) = seq.coords.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
        let k = seq.num_points();
        return Err(Error::InvalidValue(format!(
            "non-finite coordinate at frame {} point {}",
            i / k,
            i % k
        )));
    }
    let k = seq.num_points();
    let frames = (0..seq.num_frames)
        .map(|t| {
            (0..k)
                .map(|p| {
                    let [x, y, z] = seq.point(t, p);
                    vec![x, y, z, seq.confidence(t, p)]
                })
                .collect()
        })
        .collect();
    let raw = RawPose {
        version: seq.header.version.clone(),
        fps: seq.header.fps,
        components: seq.header.components.clone(),
        frames,
    };
    Ok(serde_json::to_vec(&raw)?)
}

/// Changes the frame rate by nearest-preceding frame selection.
///
/// Output length is `round(T * target / src)`; output frame `i` copies the
/// input frame `floor(i * src / target)`, clamped to the last frame.
pub fn resample_fps(seq: &PoseSequence, target_fps: f64) -> Result<PoseSequence> {
    if !(target_fps.is_finite() && target_fps > 0.0) {
        return Err(Error::InvalidValue(format!(
            "target fps must be positive, got {target_fps}"
        )));
    }
    let src_fps = seq.fps();
    let mut header = seq.header.clone();
    header.fps = target_fps;
    if src_fps == target_fps {
        return Ok(PoseSequence { header, ..seq.clone() });
    }
    let t = seq.num_frames;
    let out_t = round_half_away(t as f64 * target_fps / src_fps) as usize;
    let k = seq.num_points();
    let mut coords = Vec::with_capacity(out_t * k);
    let mut confidence = Vec::with_capacity(out_t * k);
    for i in 0..out_t {
        let src = ((i as f64 * src_fps / target_fps).floor() as usize).min(t.saturating_sub(1));
        coords.extend_from_slice(seq.frame_points(src));
        confidence.extend_from_slice(seq.frame_confidence(src));
    }
    Ok(PoseSequence {
        header,
        num_frames: out_t,
        coords,
        confidence,
    })
}

fn is_leg_point(name: &str) -> bool {
    LEG_MARKERS.iter().any(|m| name.contains(m))
}

/// Scales the sequence so the mean shoulder width is 1, moves the mean
/// shoulder midpoint to the origin and drops the leg points of BODY.
///
/// Statistics are computed once for the whole sequence over frames where
/// both shoulders are tracked, each frame weighted by the product of the
/// two shoulder confidences.
pub fn normalize_pose(seq: &PoseSequence) -> Result<PoseSequence> {
    let left = seq
        .header
        .point_index(BODY, LEFT_SHOULDER)
        .ok_or_else(|| Error::Normalization(format!("{BODY}.{LEFT_SHOULDER} not in header")))?;
    let right = seq
        .header
        .point_index(BODY, RIGHT_SHOULDER)
        .ok_or_else(|| Error::Normalization(format!("{BODY}.{RIGHT_SHOULDER} not in header")))?;

    let mut weight_sum = 0.0;
    let mut dist_sum = 0.0;
    let mut mid_sum = [0.0; 3];
    for t in 0..seq.num_frames {
        let w = seq.confidence(t, left) * seq.confidence(t, right);
        if w <= 0.0 {
            continue;
        }
        let l = seq.point(t, left);
        let r = seq.point(t, right);
        dist_sum += w * crate::geometry::distance(l, r);
        for a in 0..3 {
            mid_sum[a] += w * 0.5 * (l[a] + r[a]);
        }
        weight_sum += w;
    }
    if weight_sum == 0.0 {
        return Err(Error::Normalization(
            "shoulders are never tracked together".into(),
        ));
    }
    let mean_dist = dist_sum / weight_sum;
    if !(mean_dist > 0.0) || !mean_dist.is_finite() {
        return Err(Error::Normalization(format!(
            "mean shoulder distance is {mean_dist}"
        )));
    }
    let scale = 1.0 / mean_dist;
    let center = mid_sum.map(|m| m / weight_sum);

    let mut keep = Vec::new();
    let mut components = Vec::with_capacity(seq.header.components.len());
    let mut offset = 0;
    for c in &seq.header.components {
        let mut points = Vec::new();
        for (i, name) in c.points.iter().enumerate() {
            if c.name == BODY && is_leg_point(name) {
                continue;
            }
            keep.push(offset + i);
            points.push(name.clone());
        }
        offset += c.points.len();
        components.push(Component::new(c.name.clone(), points));
    }

    let mut coords = Vec::with_capacity(seq.num_frames * keep.len());
    let mut confidence = Vec::with_capacity(seq.num_frames * keep.len());
    for t in 0..seq.num_frames {
        for &k in &keep {
            let c = seq.confidence(t, k);
            confidence.push(c);
            if c > 0.0 {
                let p = seq.point(t, k);
                coords.push([
                    (p[0] - center[0]) * scale,
                    (p[1] - center[1]) * scale,
                    (p[2] - center[2]) * scale,
                ]);
            } else {
                coords.push([0.0; 3]);
            }
        }
    }
    let header = PoseHeader {
        components,
        ..seq.header.clone()
    };
    Ok(PoseSequence {
        header,
        num_frames: seq.num_frames,
        coords,
        confidence,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRef {
    All,
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorEntry {
    pub component: String,
    pub point: PointRef,
}

/// An ordered list of (component, point-or-all) entries.
///
/// Output components appear in order of their first entry; points within a
/// component follow entry order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSelector {
    pub entries: Vec<SelectorEntry>,
}

#[derive(Deserialize)]
struct SelectorFile {
    entries: Vec<SelectorFileEntry>,
}

#[derive(Deserialize)]
struct SelectorFileEntry {
    component: String,
    #[serde(default)]
    points: Option<Vec<String>>,
}

const FACE_CONTOUR_CONFIG: &str = include_str!("../config/face_contour_128.json");

impl PointSelector {
    pub fn all_of(components: &[&str]) -> Self {
        PointSelector {
            entries: components
                .iter()
                .map(|c| SelectorEntry {
                    component: c.to_string(),
                    point: PointRef::All,
                })
                .collect(),
        }
    }

    pub fn named(component: &str, points: &[&str]) -> Self {
        PointSelector {
            entries: points
                .iter()
                .map(|p| SelectorEntry {
                    component: component.to_string(),
                    point: PointRef::Named(p.to_string()),
                })
                .collect(),
        }
    }

    /// Whole body plus both hands: 33 + 2 x 21 = 75 points on a raw
    /// holistic pose, 65 once the legs are removed by normalization.
    pub fn body75() -> Self {
        Self::all_of(&[BODY, LEFT_HAND, RIGHT_HAND])
    }

    /// The 128 face-contour landmarks listed in `config/face_contour_128.json`.
    pub fn face_contour_128() -> Self {
        Self::from_config(FACE_CONTOUR_CONFIG).expect("bundled selector config is valid")
    }

    /// Reads a selector config: `{"entries":[{"component":..,"points":[..]}]}`,
    /// where omitting `points` selects the whole component.
    pub fn from_config(text: &str) -> Result<Self> {
        let file: SelectorFile = serde_json::from_str(text)?;
        let mut entries = Vec::new();
        for e in file.entries {
            match e.points {
                None => entries.push(SelectorEntry {
                    component: e.component,
                    point: PointRef::All,
                }),
                Some(points) => entries.extend(points.into_iter().map(|p| SelectorEntry {
                    component: e.component.clone(),
                    point: PointRef::Named(p),
                })),
            }
        }
        Ok(PointSelector { entries })
    }

    /// Looks up a named selector shipped with the crate.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "body75" => Ok(Self::body75()),
            "face-contour-128" => Ok(Self::face_contour_128()),
            "all" => Ok(PointSelector { entries: Vec::new() }),
            other => Err(Error::Unresolved(format!("unknown selector {other:?}"))),
        }
    }

    /// Resolves the entries against a header into output components and
    /// flattened source indices. An empty selector selects everything.
    fn resolve(&self, header: &PoseHeader) -> Result<(Vec<Component>, Vec<usize>)> {
        if self.entries.is_empty() {
            return Ok((header.components.clone(), (0..header.num_points()).collect()));
        }
        let mut order: Vec<String> = Vec::new();
        let mut per_component: HashMap<String, Vec<usize>> = HashMap::new();
        for entry in &self.entries {
            let component = header.component(&entry.component).ok_or_else(|| {
                Error::Unresolved(format!("component {:?} not in pose", entry.component))
            })?;
            let local: Vec<usize> = match &entry.point {
                PointRef::All => (0..component.points.len()).collect(),
                PointRef::Named(name) => {
                    let i = component.points.iter().position(|p| p == name).ok_or_else(|| {
                        Error::Unresolved(format!(
                            "point {:?} not in component {:?}",
                            name, entry.component
                        ))
                    })?;
                    vec![i]
                }
            };
            if local.is_empty() {
                return Err(Error::Unresolved(format!(
                    "component {:?} has no points",
                    entry.component
                )));
            }
            let slot = per_component.entry(entry.component.clone()).or_insert_with(|| {
                order.push(entry.component.clone());
                Vec::new()
            });
            for i in local {
                if slot.contains(&i) {
                    return Err(Error::Unresolved(format!(
                        "point {:?} of {:?} selected twice",
                        component.points[i], entry.component
                    )));
                }
                slot.push(i);
            }
        }
        let mut components = Vec::new();
        let mut indices = Vec::new();
        for name in order {
            let offset = header.component_offset(&name).expect("resolved above");
            let source = header.component(&name).expect("resolved above");
            let local = &per_component[&name];
            components.push(Component::new(
                name.clone(),
                local.iter().map(|&i| source.points[i].clone()).collect(),
            ));
            indices.extend(local.iter().map(|&i| offset + i));
        }
        Ok((components, indices))
    }
}

/// Keeps only the points named by the selector, in selector order.
pub fn select_points(seq: &PoseSequence, selector: &PointSelector) -> Result<PoseSequence> {
    let (components, indices) = selector.resolve(&seq.header)?;
    let mut coords = Vec::with_capacity(seq.num_frames * indices.len());
    let mut confidence = Vec::with_capacity(seq.num_frames * indices.len());
    for t in 0..seq.num_frames {
        for &k in &indices {
            coords.push(seq.point(t, k));
            confidence.push(seq.confidence(t, k));
        }
    }
    Ok(PoseSequence {
        header: PoseHeader {
            components,
            ..seq.header.clone()
        },
        num_frames: seq.num_frames,
        coords,
        confidence,
    })
}

/// A header with the holistic layout: 33 body points, two 21-point hands
/// and the 468-point face mesh (face points are named by index).
pub fn holistic_header(fps: f64) -> Result<PoseHeader> {
    let body = HOLISTIC_BODY_POINTS.iter().map(|s| s.to_string()).collect();
    let hand: Vec<String> = crate::hand::HAND_POINTS.iter().map(|s| s.to_string()).collect();
    let face = (0..HOLISTIC_FACE_POINTS).map(|i| i.to_string()).collect();
    PoseHeader::new(
        fps,
        vec![
            Component::new(BODY, body),
            Component::new(FACE, face),
            Component::new(LEFT_HAND, hand.clone()),
            Component::new(RIGHT_HAND, hand),
        ],
    )
}
