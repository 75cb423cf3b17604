//! 3D hand normalization and rule-based hand descriptors.
//!
//! A hand is 21 landmarks in the usual estimator order. Normalization puts
//! the back of the hand on the XY plane, turns the middle-finger metacarpal
//! onto +Y, scales that bone to [`METACARPAL_LENGTH`] and moves the wrist to
//! the origin. MACE and CCE measure how consistently an estimator places the
//! landmarks of one hand shape across views and crops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};
use crate::pose::PoseSequence;

pub const NUM_HAND_POINTS: usize = 21;

pub const HAND_POINTS: [&str; NUM_HAND_POINTS] = [
    "WRIST", "T_CMC", "T_MCP", "T_IP", "T_TIP", "I_MCP", "I_PIP", "I_DIP", "I_TIP", "M_MCP",
    "M_PIP", "M_DIP", "M_TIP", "R_MCP", "R_PIP", "R_DIP", "R_TIP", "P_MCP", "P_PIP", "P_DIP",
    "P_TIP",
];

pub const WRIST: usize = 0;
pub const I_MCP: usize = 5;
pub const M_MCP: usize = 9;
pub const M_TIP: usize = 12;
pub const P_MCP: usize = 17;

/// Length of the middle-finger metacarpal after normalization.
pub const METACARPAL_LENGTH: f64 = 200.0;

/// Bias applied to the vertical extent of the metacarpal when estimating the plane.
pub const PLANE_Y_BIAS: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Handedness {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandPose {
    pub points: [Vec3; NUM_HAND_POINTS],
    pub handedness: Handedness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HandPlane {
    Wall,
    Floor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HandView {
    Front,
    Sideways,
    Back,
}

/// Same-shape hands seen from different views or crops.
#[derive(Debug, Clone)]
pub struct HandGroup {
    pub label: String,
    pub members: Vec<HandPose>,
}

impl HandPose {
    pub fn new(points: [Vec3; NUM_HAND_POINTS], handedness: Handedness) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("hand has non-finite coordinates".into()));
        }
        Ok(HandPose { points, handedness })
    }

    /// Reads one hand from a frame of a pose sequence. Returns `None` when
    /// the component is absent or any of its 21 points is untracked.
    pub fn from_frame(
        seq: &PoseSequence,
        frame: usize,
        component: &str,
        handedness: Handedness,
    ) -> Option<HandPose> {
        let header = seq.header();
        let c = header.component(component)?;
        if c.points.len() != NUM_HAND_POINTS {
            return None;
        }
        let offset = header.component_offset(component)?;
        let mut points = [[0.0; 3]; NUM_HAND_POINTS];
        for (i, p) in points.iter_mut().enumerate() {
            if !seq.is_present(frame, offset + i) {
                return None;
            }
            *p = seq.point(frame, offset + i);
        }
        Some(HandPose { points, handedness })
    }

    pub fn wrist(&self) -> Vec3 {
        self.points[WRIST]
    }

    pub fn middle_mcp(&self) -> Vec3 {
        self.points[M_MCP]
    }

    pub fn map(&self, f: impl Fn(Vec3) -> Vec3) -> HandPose {
        HandPose {
            points: self.points.map(f),
            handedness: self.handedness,
        }
    }
}

fn unit_normal(a: Vec3, b: Vec3, c: Vec3) -> Result<Vec3> {
    let u = geometry::sub(b, a);
    let v = geometry::sub(c, a);
    let n = geometry::cross(u, v);
    let len = geometry::norm(n);
    let scale = geometry::norm(u) * geometry::norm(v);
    if !(len > 1e-12 * scale) || scale == 0.0 {
        return Err(Error::Degenerate("palm triangle is collinear".into()));
    }
    Ok(geometry::scale(n, 1.0 / len))
}

/// Unit normal of the WRIST, I_MCP, P_MCP triangle (right-hand rule in that order).
pub fn palm_normal(hand: &HandPose) -> Result<Vec3> {
    unit_normal(hand.points[WRIST], hand.points[I_MCP], hand.points[P_MCP])
}

/// Canonical orientation, scale and position of a hand.
///
/// Left hands are mirrored across the YZ plane first so both hands share
/// one frame. When M_MCP lies in the palm plane it ends at exactly
/// (0, 200, 0).
pub fn hand_normalize(hand: &HandPose) -> Result<HandPose> {
    let mirrored = match hand.handedness {
        Handedness::Left => hand.map(|[x, y, z]| [-x, y, z]),
        Handedness::Right => hand.clone(),
    };
    let wrist = mirrored.wrist();
    let bone_len = geometry::distance(mirrored.middle_mcp(), wrist);
    if !(bone_len > 0.0) {
        return Err(Error::Degenerate(
            "middle metacarpal has zero length".into(),
        ));
    }
    let normal = palm_normal(&mirrored)?;

    let to_z = geometry::rotation_between(normal, [0.0, 0.0, 1.0]);
    let bone = geometry::apply(&to_z, geometry::sub(mirrored.middle_mcp(), wrist));
    let planar = bone[0].hypot(bone[1]);
    if !(planar > 1e-12 * bone_len) {
        return Err(Error::Degenerate(
            "middle metacarpal is perpendicular to the palm".into(),
        ));
    }
    // Angle that turns the projected bone onto +Y.
    let angle = bone[0].atan2(bone[1]);
    let about_z = geometry::axis_angle([0.0, 0.0, 1.0], angle);
    let rotation = geometry::mat_mul(&about_z, &to_z);
    let s = METACARPAL_LENGTH / bone_len;

    let mut out = mirrored.map(|p| geometry::scale(geometry::apply(&rotation, geometry::sub(p, wrist)), s));
    out.handedness = hand.handedness;
    Ok(out)
}

pub fn estimate_plane(hand: &HandPose) -> HandPlane {
    let (m, w) = (hand.middle_mcp(), hand.wrist());
    let y = (m[1] - w[1]).abs() * PLANE_Y_BIAS;
    let z = (m[2] - w[2]).abs();
    if y > z {
        HandPlane::Wall
    } else {
        HandPlane::Floor
    }
}

/// `atan2(v, u)` in degrees, in [-180, 180).
fn signed_angle_deg(u: f64, v: f64) -> f64 {
    let a = v.atan2(u).to_degrees();
    if a >= 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// `atan2(v, u)` in degrees, in [0, 360).
fn positive_angle_deg(u: f64, v: f64) -> f64 {
    let a = v.atan2(u).to_degrees();
    if a < 0.0 {
        a + 360.0
    } else {
        a
    }
}

pub fn estimate_view(hand: &HandPose) -> Result<HandView> {
    let n = palm_normal(hand)?;
    let view = match estimate_plane(hand) {
        HandPlane::Wall => {
            let a = positive_angle_deg(n[2], n[0]);
            if a > 210.0 {
                HandView::Front
            } else if a > 150.0 {
                HandView::Sideways
            } else {
                HandView::Back
            }
        }
        HandPlane::Floor => {
            let a = signed_angle_deg(n[1], n[0]);
            if a > 0.0 {
                HandView::Front
            } else if a > -60.0 {
                HandView::Sideways
            } else {
                HandView::Back
            }
        }
    };
    Ok(view)
}

/// Angle of the wrist to M_MCP direction in the XY plane, counterclockwise
/// from +Y, in degrees within [0, 360).
pub fn rotation_angle(hand: &HandPose) -> Result<f64> {
    let d = geometry::sub(hand.middle_mcp(), hand.wrist());
    if d[0] == 0.0 && d[1] == 0.0 {
        return Err(Error::Degenerate(
            "metacarpal has no extent in the XY plane".into(),
        ));
    }
    Ok(positive_angle_deg(d[1], -d[0]))
}

/// One of eight 45 degree bins, bin 0 centered on +Y, bins half-open.
pub fn estimate_rotation(hand: &HandPose) -> Result<u8> {
    let theta = rotation_angle(hand)?;
    let shifted = (theta + 22.5).rem_euclid(360.0);
    Ok(((shifted / 45.0).floor() as u8).min(7))
}

/// Mean over the 63 landmark axes of the population standard deviation across members.
fn mean_landmark_std(members: &[HandPose]) -> f64 {
    let n = members.len() as f64;
    let mut total = 0.0;
    for k in 0..NUM_HAND_POINTS {
        for a in 0..3 {
            let mean = members.iter().map(|h| h.points[k][a]).sum::<f64>() / n;
            let var = members
                .iter()
                .map(|h| (h.points[k][a] - mean).powi(2))
                .sum::<f64>()
                / n;
            total += var.sqrt();
        }
    }
    total / (NUM_HAND_POINTS * 3) as f64
}

fn require_members(group: &HandGroup) -> Result<()> {
    if group.members.len() < 2 {
        return Err(Error::InvalidValue(format!(
            "group {:?} needs at least 2 members, has {}",
            group.label,
            group.members.len()
        )));
    }
    Ok(())
}

/// Multi-angle consistency error: landmark spread after full normalization.
pub fn mace(group: &HandGroup) -> Result<f64> {
    require_members(group)?;
    let normalized = group
        .members
        .iter()
        .map(hand_normalize)
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_landmark_std(&normalized))
}

/// Wrist-aligned members, as overlaid for crop consistency.
pub fn wrist_aligned(hand: &HandPose) -> HandPose {
    let w = hand.wrist();
    hand.map(|p| geometry::sub(p, w))
}

/// Crop consistency error: landmark spread after moving each wrist to the origin.
pub fn cce(group: &HandGroup) -> Result<f64> {
    require_members(group)?;
    let aligned: Vec<_> = group.members.iter().map(wrist_aligned).collect();
    Ok(mean_landmark_std(&aligned))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A flat synthetic right hand: palm in the XY plane, fingers spread.
    pub(crate) fn flat_hand() -> HandPose {
        let mut points = [[0.0; 3]; NUM_HAND_POINTS];
        let fingers = [(60.0, 1), (20.0, 5), (0.0, 9), (-20.0, 13), (-40.0, 17)];
        for (finger, &(x, start)) in fingers.iter().enumerate() {
            let base_len = if finger == 0 { 80.0 } else { 200.0 };
            for j in 0..4 {
                let y = base_len * if finger == 0 { 0.5 + 0.5 * j as f64 } else { 1.0 + 0.4 * j as f64 };
                points[start + j] = [x * (1.0 + 0.2 * j as f64), y, 3.0 * j as f64];
            }
        }
        points[WRIST] = [0.0, 0.0, 0.0];
        points[I_MCP][2] = 0.0;
        points[M_MCP] = [0.0, 200.0, 0.0];
        points[P_MCP][2] = 0.0;
        HandPose::new(points, Handedness::Right).unwrap()
    }

    fn hand_with(wrist: Vec3, i_mcp: Vec3, m_mcp: Vec3, p_mcp: Vec3) -> HandPose {
        let mut points = [[0.0; 3]; NUM_HAND_POINTS];
        points[WRIST] = wrist;
        points[I_MCP] = i_mcp;
        points[M_MCP] = m_mcp;
        points[P_MCP] = p_mcp;
        HandPose::new(points, Handedness::Right).unwrap()
    }

    /// Hand whose palm normal is `n` and whose wrist-to-M_MCP direction is `m`
    /// (`m` must be a unit vector orthogonal to `n`).
    fn hand_with_normal(n: Vec3, m: Vec3) -> HandPose {
        let v = geometry::cross(n, m);
        hand_with([0.0; 3], m, m, v)
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() < tol)
    }

    #[test]
    fn palm_normal_cases() {
        let h = hand_with([0.0; 3], [1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.0, 1.0, 0.0]);
        assert_eq!(palm_normal(&h).unwrap(), [0.0, 0.0, 1.0]);
        let h = hand_with([0.0; 3], [0.0, 1.0, 0.0], [0.5, 0.5, 0.0], [1.0, 0.0, 0.0]);
        assert_eq!(palm_normal(&h).unwrap(), [0.0, 0.0, -1.0]);
        let h = hand_with([0.0; 3], [1.0, 1.0, 1.0], [0.5, 0.5, 0.0], [2.0, 2.0, 2.0]);
        assert!(matches!(palm_normal(&h), Err(Error::Degenerate(_))));
    }

    #[test]
    fn normalized_hand_is_fixed_point() {
        let h = flat_hand();
        let n = hand_normalize(&h).unwrap();
        for k in 0..NUM_HAND_POINTS {
            assert!(close(n.points[k], h.points[k], 1e-9), "point {k}");
        }
        assert!(close(n.points[M_MCP], [0.0, 200.0, 0.0], 1e-9));
        assert!(close(n.points[WRIST], [0.0; 3], 1e-9));
        let twice = hand_normalize(&n).unwrap();
        assert_eq!(twice.points.len(), NUM_HAND_POINTS);
        for k in 0..NUM_HAND_POINTS {
            assert!(close(twice.points[k], n.points[k], 1e-9));
        }
    }

    #[test]
    fn normalize_errors() {
        let h = hand_with([0.0; 3], [1.0, 0.0, 0.0], [0.0; 3], [0.0, 1.0, 0.0]);
        assert!(matches!(hand_normalize(&h), Err(Error::Degenerate(_))));
        let h = hand_with([0.0; 3], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]);
        assert!(matches!(hand_normalize(&h), Err(Error::Degenerate(_))));
    }

    #[test]
    fn left_hand_is_mirrored() {
        let right = flat_hand();
        let mut left = right.map(|[x, y, z]| [-x, y, z]);
        left.handedness = Handedness::Left;
        let a = hand_normalize(&right).unwrap();
        let b = hand_normalize(&left).unwrap();
        for k in 0..NUM_HAND_POINTS {
            assert!(close(a.points[k], b.points[k], 1e-9));
        }
        assert_eq!(b.handedness, Handedness::Left);
    }

    #[test]
    fn plane_rules() {
        let up = hand_with([0.0; 3], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]);
        assert_eq!(estimate_plane(&up), HandPlane::Wall);
        let h = hand_with([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 0.0, 1.0]);
        assert_eq!(estimate_plane(&h), HandPlane::Floor);
        let tie = hand_with([0.0; 3], [1.0, 0.0, 0.0], [0.0, 2.0, 3.0], [0.0, 0.0, 1.0]);
        assert_eq!(estimate_plane(&tie), HandPlane::Floor);
    }

    #[test]
    fn view_rules() {
        let wall = |deg: f64| {
            let a = deg.to_radians();
            hand_with_normal([a.sin(), 0.0, a.cos()], [0.0, -1.0, 0.0])
        };
        assert_eq!(estimate_plane(&wall(220.0)), HandPlane::Wall);
        assert_eq!(estimate_view(&wall(220.0)).unwrap(), HandView::Front);
        assert_eq!(estimate_view(&wall(160.0)).unwrap(), HandView::Sideways);
        assert_eq!(estimate_view(&wall(90.0)).unwrap(), HandView::Back);

        let floor = |deg: f64| {
            let a = deg.to_radians();
            hand_with_normal([a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0])
        };
        assert_eq!(estimate_plane(&floor(-90.0)), HandPlane::Floor);
        assert_eq!(estimate_view(&floor(-90.0)).unwrap(), HandView::Back);
        assert_eq!(estimate_view(&floor(-30.0)).unwrap(), HandView::Sideways);
        assert_eq!(estimate_view(&floor(45.0)).unwrap(), HandView::Front);
    }

    #[test]
    fn rotation_bins() {
        let along = |d: Vec3| hand_with([1.0, 1.0, 1.0], [3.0, 1.0, 1.0], geometry::add([1.0, 1.0, 1.0], d), [1.0, 1.0, 3.0]);
        assert_eq!(estimate_rotation(&along([0.0, 1.0, 0.0])).unwrap(), 0);
        assert_eq!(estimate_rotation(&along([1.0, 0.0, 0.0])).unwrap(), 6);
        assert_eq!(estimate_rotation(&along([-1.0, 0.0, 0.0])).unwrap(), 2);
        assert_eq!(estimate_rotation(&along([0.0, -1.0, 0.0])).unwrap(), 4);
        let a = 22.5f64.to_radians();
        // counterclockwise from +Y by 22.5 degrees
        let d = [-a.sin(), a.cos(), 0.0];
        assert!((rotation_angle(&along(d)).unwrap() - 22.5).abs() < 1e-9);
        assert!(matches!(estimate_rotation(&along([0.0, 0.0, 1.0])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rotation_boundary_is_half_open() {
        // Exactly 22.5 degrees is representable through the bin arithmetic.
        let shifted: f64 = (22.5 + 22.5) % 360.0;
        assert_eq!((shifted / 45.0).floor() as u8, 1);
        let shifted: f64 = (360.0 - 22.5 + 22.5f64).rem_euclid(360.0);
        assert_eq!((shifted / 45.0).floor() as u8, 0);
    }

    #[test]
    fn mace_cases() {
        let h = flat_hand();
        let same = HandGroup { label: "a".into(), members: vec![h.clone(), h.clone(), h.clone()] };
        assert_eq!(mace(&same).unwrap(), 0.0);

        let d = 7.0;
        let mut plus = h.clone();
        plus.points[M_TIP][0] += d;
        let mut minus = h.clone();
        minus.points[M_TIP][0] -= d;
        let pair = HandGroup { label: "b".into(), members: vec![plus, minus] };
        assert!((mace(&pair).unwrap() - d / 63.0).abs() < 1e-9);

        let single = HandGroup { label: "c".into(), members: vec![h] };
        assert!(mace(&single).is_err());
        assert!(cce(&single).is_err());
    }

    #[test]
    fn cce_cases() {
        let h = flat_hand();
        let moved = h.map(|p| geometry::add(p, [5.0, -3.0, 2.0]));
        let group = HandGroup { label: "t".into(), members: vec![h.clone(), moved] };
        assert_eq!(cce(&group).unwrap(), 0.0);
        let scaled = h.map(|p| geometry::scale(p, 2.0));
        let group = HandGroup { label: "s".into(), members: vec![h, scaled] };
        assert!(cce(&group).unwrap() > 0.0);
    }
}
