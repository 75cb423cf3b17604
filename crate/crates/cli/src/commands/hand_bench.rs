use std::fmt::Write as _;

use serde::Deserialize;
use signseg::hand::{cce, hand_normalize, mace, HandGroup, HandPose, Handedness, HAND_POINTS};
use signseg::pose::{LEFT_HAND, RIGHT_HAND};

use super::{manifest_in, num};
use crate::args::{Command, HandArg, HandBenchArgs};
use crate::config::Settings;
use crate::data;
use crate::error::{fail, CliResult, Stage, StageExt};

pub const SCORES: &str = "hand_bench.csv";
pub const OVERLAY: &str = "overlay.csv";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestGroup {
    label: String,
    files: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HandManifest {
    groups: Vec<ManifestGroup>,
}

pub fn run(args: &HandBenchArgs, command: &Command, settings: &Settings) -> CliResult<()> {
    let bytes = data::read(&args.manifest)?;
    let manifest: HandManifest =
        serde_json::from_slice(&bytes).stage_with(Stage::Load, || args.manifest.display().to_string())?;
    let base = args.manifest.parent().unwrap_or_else(|| std::path::Path::new("."));
    let (component, handedness) = match args.hand {
        HandArg::Left => (LEFT_HAND, Handedness::Left),
        HandArg::Right => (RIGHT_HAND, Handedness::Right),
    };

    let mut scores = String::from("label,members,mace,cce\n");
    let mut overlay = String::from("label,member,point,x,y,z\n");
    for group in &manifest.groups {
        let members = data::par_map(settings.workers, &group.files, |file| {
            let path = base.join(file);
            let seq = data::load_pose(&path)?;
            let frame = (0..seq.num_frames())
                .find(|&f| HandPose::from_frame(&seq, f, component, handedness).is_some())
                .ok_or_else(|| fail(Stage::Load, format!("{}: no fully tracked {component}", path.display())))?;
            Ok(HandPose::from_frame(&seq, frame, component, handedness).expect("checked above"))
        })?;
        let hands = HandGroup { label: group.label.clone(), members };
        let m = mace(&hands).stage_with(Stage::Eval, || group.label.clone())?;
        let c = cce(&hands).stage_with(Stage::Eval, || group.label.clone())?;
        let _ = writeln!(scores, "{},{},{},{}", group.label, hands.members.len(), num(m), num(c));
        for (file, hand) in group.files.iter().zip(&hands.members) {
            let n = hand_normalize(hand).stage_with(Stage::Normalize, || file.clone())?;
            for (name, p) in HAND_POINTS.iter().zip(n.points) {
                let _ = writeln!(overlay, "{},{},{},{},{},{}", group.label, file, name, num(p[0]), num(p[1]), num(p[2]));
            }
        }
    }
    data::write(&args.out.join(SCORES), scores)?;
    data::write(&args.out.join(OVERLAY), overlay)?;
    manifest_in(&args.out, command, settings)
}
