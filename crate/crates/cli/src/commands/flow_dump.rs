use std::fmt::Write as _;

use signseg::features::optical_flow;
use signseg::pose::{normalize_pose, resample_fps, select_points};

use super::{num, write_manifest};
use crate::args::{Command, FlowDumpArgs};
use crate::config::Settings;
use crate::data;
use crate::error::{CliResult, Stage, StageExt};

pub fn run(args: &FlowDumpArgs, command: &Command, settings: &Settings) -> CliResult<()> {
    let name = args.input.display().to_string();
    let seq = data::load_pose(&args.input)?;
    let seq = resample_fps(&seq, settings.fps).stage_with(Stage::Resample, || name.clone())?;
    let mut csv = String::from("frame,point,value\n");
    if seq.num_frames() > 0 {
        let seq = normalize_pose(&seq).stage_with(Stage::Normalize, || name.clone())?;
        let seq = select_points(&seq, &settings.selector()?).stage_with(Stage::Select, || name.clone())?;
        let names: Vec<String> = seq
            .header()
            .components
            .iter()
            .flat_map(|c| c.points.iter().map(move |p| format!("{}.{p}", c.name)))
            .collect();
        let flow = optical_flow(&seq);
        for f in 0..seq.num_frames() {
            for (k, point) in names.iter().enumerate() {
                let _ = writeln!(csv, "{f},{point},{}", num(flow.get(f, k)));
            }
        }
    }
    match &args.out {
        Some(path) => {
            data::write(path, &csv)?;
            write_manifest(&path.with_extension("run.json"), command, settings)
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
