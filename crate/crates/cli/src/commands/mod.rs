mod eval;
mod fidelity;
mod flow_dump;
mod hand_bench;
mod segment;
mod train;
mod tune;

use std::path::Path;

use serde::Serialize;
use signseg::decode::decode;
use signseg::features::{FeatureMatrix, FeatureOptions};
use signseg::pose::PointSelector;
use signseg::tagger::{load_model, FrameProbs, TaggerModel};
use signseg::tags::{Segment, Tier};

use crate::args::Command;
use crate::config::{Settings, TierDecode, RUN_MANIFEST};
use crate::data;
use crate::error::{fail, CliResult, Stage, StageExt};

pub use eval::run as eval;
pub use fidelity::run as bio_fidelity;
pub use flow_dump::run as flow_dump;
pub use hand_bench::run as hand_bench;
pub use segment::run as segment;
pub use train::run as train;
pub use tune::run as tune;

#[derive(Serialize)]
struct Manifest<'a> {
    #[serde(flatten)]
    command: &'a Command,
    settings: &'a Settings,
}

/// Writes the resolved configuration next to a command's outputs.
pub(crate) fn write_manifest(path: &Path, command: &Command, settings: &Settings) -> CliResult<()> {
    data::write_json(path, &Manifest { command, settings })
}

pub(crate) fn manifest_in(dir: &Path, command: &Command, settings: &Settings) -> CliResult<()> {
    write_manifest(&dir.join(RUN_MANIFEST), command, settings)
}

pub(crate) fn load_checkpoint(path: &Path) -> CliResult<TaggerModel> {
    load_model(path).stage_with(Stage::Model, || path.display().to_string())
}

/// Features of one pose file and the model's frame probabilities. `None`
/// when the sequence has no frames.
pub(crate) fn predict_pose(
    model: &TaggerModel,
    path: &Path,
    settings: &Settings,
    selector: &PointSelector,
) -> CliResult<Option<(FeatureMatrix, FrameProbs)>> {
    let name = path.display().to_string();
    let seq = data::load_pose(path)?;
    let Some(x) = data::features(&seq, settings, selector, &name)? else {
        return Ok(None);
    };
    let expected = model.config().input_dim;
    if x.width != expected {
        return Err(fail(
            Stage::Model,
            format!(
                "{name}: checkpoint expects {expected} input features but selector {} with features {} produces {}",
                settings.selector,
                describe_features(settings.features),
                x.width
            ),
        ));
    }
    let probs = model.predict(&x).stage_with(Stage::Model, || name.clone())?;
    Ok(Some((x, probs)))
}

fn describe_features(f: FeatureOptions) -> String {
    let names: Vec<&str> = [(f.include_flow, "flow"), (f.include_hand_norm, "handnorm")]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect();
    if names.is_empty() {
        "none".into()
    } else {
        names.join(",")
    }
}

pub(crate) fn decode_tiers(probs: &FrameProbs, params: &TierDecode) -> CliResult<[Vec<Segment>; 2]> {
    for tier in Tier::ALL {
        params.get(tier).validate().stage(Stage::Decode)?;
    }
    Ok(Tier::ALL.map(|tier| decode(&probs.scaled(tier), params.get(tier), tier)))
}

/// Shortest round-trip text of a float, as used in every CSV.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}
