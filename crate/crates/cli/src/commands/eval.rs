use std::path::{Path, PathBuf};

use signseg::report::{EvalInput, EvalReport};
use signseg::tags::{retime_segments, Tier};

use super::{decode_tiers, load_checkpoint, manifest_in, predict_pose};
use crate::args::{Command, EvalArgs};
use crate::config::Settings;
use crate::data::{self, Pair, POSE_SUFFIX, PROBS_SUFFIX, SEGMENTS_SUFFIX};
use crate::error::{fail, CliResult, Stage, StageExt};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TABLE: &str = "report.txt";

fn segment_pairs(pred: &Path, gold: &Path) -> CliResult<Vec<Pair>> {
    match (pred.is_dir(), gold.is_dir()) {
        (true, true) => data::pair_files(pred, SEGMENTS_SUFFIX, gold, SEGMENTS_SUFFIX),
        (false, false) => Ok(vec![Pair {
            stem: data::stem(pred),
            first: pred.to_path_buf(),
            second: gold.to_path_buf(),
        }]),
        _ => Err(fail(Stage::Load, "--pred and --gold must both be files or both be directories")),
    }
}

/// Predicted segments against gold; the evaluation runs at the prediction
/// frame rate. A `<stem>.probs.json` beside the prediction supplies frame
/// probabilities and the frame count.
fn from_files(pred_path: &Path, gold_path: &Path) -> CliResult<(f64, Vec<[EvalInput; 2]>)> {
    let pairs = segment_pairs(pred_path, gold_path)?;
    let mut fps = None;
    let mut items = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let pred = data::load_segments(&pair.first)?;
        let gold = data::load_segments(&pair.second)?;
        if *fps.get_or_insert(pred.fps) != pred.fps {
            return Err(fail(Stage::Eval, format!("{}: predictions mix frame rates", pair.first.display())));
        }
        let probs_path: PathBuf = pair.first.with_file_name(format!("{}{PROBS_SUFFIX}", pair.stem));
        let probs = if probs_path.is_file() { Some(data::load_probs(&probs_path)?) } else { None };
        let gold_at = |tier| retime_segments(&gold.segments(tier), gold.fps, pred.fps);
        let num_frames = match &probs {
            Some(p) => p.num_frames(),
            None => Tier::ALL
                .iter()
                .flat_map(|&t| pred.segments(t).into_iter().chain(gold_at(t)))
                .map(|s| s.end)
                .max()
                .unwrap_or(0),
        };
        let input = |tier: Tier| EvalInput {
            num_frames,
            pred: pred.segments(tier),
            gold: data::gold_at(&gold, tier, pred.fps, num_frames),
            probs: probs.as_ref().map(|p| p.rows(tier).to_vec()),
        };
        items.push([input(Tier::Sign), input(Tier::Phrase)]);
    }
    Ok((fps.unwrap_or(1.0), items))
}

fn from_model(model_path: &Path, dir: &Path, settings: &Settings) -> CliResult<Vec<[EvalInput; 2]>> {
    let model = load_checkpoint(model_path)?;
    let selector = settings.selector()?;
    let pairs = data::pair_files(dir, POSE_SUFFIX, dir, SEGMENTS_SUFFIX)?;
    data::par_map(settings.workers, &pairs, |pair| {
        let gold = data::load_segments(&pair.second)?;
        let (num_frames, pred, probs) = match predict_pose(&model, &pair.first, settings, &selector)? {
            Some((x, probs)) => {
                let pred = decode_tiers(&probs, &settings.decode)?;
                (x.num_frames, pred, Some(probs))
            }
            None => (0, [Vec::new(), Vec::new()], None),
        };
        let [sign, phrase] = pred;
        let input = |tier: Tier, pred| EvalInput {
            num_frames,
            pred,
            gold: data::gold_at(&gold, tier, settings.fps, num_frames),
            probs: probs.as_ref().map(|p| p.tier(tier).to_vec()),
        };
        Ok([input(Tier::Sign, sign), input(Tier::Phrase, phrase)])
    })
}

pub fn run(args: &EvalArgs, command: &Command, settings: &Settings) -> CliResult<()> {
    let (fps, items) = match (&args.pred, &args.gold, &args.model, &args.data) {
        (Some(pred), Some(gold), None, None) => from_files(pred, gold)?,
        (None, None, Some(model), Some(dir)) => (settings.fps, from_model(model, dir, settings)?),
        _ => {
            return Err(fail(
                Stage::Config,
                "eval needs either --pred and --gold, or --model and --data",
            ))
        }
    };
    let report = EvalReport::build(&items, fps).stage(Stage::Eval)?;
    let table = report.table();
    data::write_json(&args.out.join(REPORT_JSON), &report)?;
    data::write(&args.out.join(REPORT_TABLE), &table)?;
    manifest_in(&args.out, command, settings)?;
    print!("{table}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use signseg::formats::SegmentsFile;
    use signseg::tags::Segment;

    #[test]
    fn frame_count_from_segments() {
        let dir = tempfile::tempdir().unwrap();
        let seg = |s, e, t| Segment::new(s, e, t);
        let pred = SegmentsFile::new(25.0, &[seg(0, 4, Tier::Sign)], &[seg(0, 4, Tier::Phrase)]);
        let gold = SegmentsFile::new(50.0, &[seg(0, 8, Tier::Sign), seg(10, 20, Tier::Sign)], &[seg(0, 20, Tier::Phrase)]);
        let (p, g) = (dir.path().join("a.segments.json"), dir.path().join("b.json"));
        std::fs::write(&p, pred.to_bytes().unwrap()).unwrap();
        std::fs::write(&g, gold.to_bytes().unwrap()).unwrap();
        let (fps, items) = from_files(&p, &g).unwrap();
        assert_eq!(fps, 25.0);
        assert_eq!(items[0][0].num_frames, 10);
        assert_eq!(items[0][0].gold, vec![seg(0, 4, Tier::Sign), seg(5, 10, Tier::Sign)]);
    }
}
