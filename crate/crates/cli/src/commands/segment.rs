use signseg::formats::{write_vtt, ProbTiers, ProbsFile, SegmentsFile};
use signseg::tags::Tier;

use super::{decode_tiers, load_checkpoint, manifest_in, predict_pose};
use crate::args::{Command, SegmentArgs};
use crate::config::Settings;
use crate::data::{self, PROBS_SUFFIX, SEGMENTS_SUFFIX};
use crate::error::{CliResult, Stage, StageExt};

struct Output {
    stem: String,
    segments: SegmentsFile,
    probs: ProbsFile,
}

pub fn run(args: &SegmentArgs, command: &Command, settings: &Settings) -> CliResult<()> {
    let model = load_checkpoint(&args.model)?;
    let selector = settings.selector()?;
    let outputs = data::par_map(settings.workers, &args.inputs, |path| {
        let stem = data::stem(path);
        let Some((_, probs)) = predict_pose(&model, path, settings, &selector)? else {
            return Ok(Output {
                stem,
                segments: SegmentsFile::new(settings.fps, &[], &[]),
                probs: ProbsFile { fps: settings.fps, tiers: ProbTiers::default() },
            });
        };
        let [sign, phrase] = decode_tiers(&probs, &settings.decode)?;
        Ok(Output {
            stem,
            segments: SegmentsFile::new(settings.fps, &sign, &phrase),
            probs: ProbsFile {
                fps: settings.fps,
                tiers: ProbTiers { sign: probs.sign, phrase: probs.phrase },
            },
        })
    })?;

    for out in outputs {
        let base = |suffix: &str| args.out.join(format!("{}{suffix}", out.stem));
        data::write(&base(SEGMENTS_SUFFIX), out.segments.to_bytes().stage(Stage::Write)?)?;
        for tier in Tier::ALL {
            let vtt = write_vtt(&out.segments.segments(tier), settings.fps);
            data::write(&base(&format!(".{}.vtt", tier.name())), vtt)?;
        }
        if args.write_probs {
            data::write(&base(PROBS_SUFFIX), out.probs.to_bytes().stage(Stage::Write)?)?;
        }
    }
    manifest_in(&args.out, command, settings)
}
