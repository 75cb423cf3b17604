use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use signseg::decode::DecodeParams;
use signseg::formats::{ProbTiers, ProbsFile};
use signseg::tags::Tier;
use signseg::tune::{default_grid, evaluate_params, tune_thresholds, DevItem};

use super::{load_checkpoint, manifest_in, num, predict_pose};
use crate::args::{Command, TuneArgs};
use crate::config::{parse_list, Settings};
use crate::data::{self, Pair, POSE_SUFFIX, PROBS_SUFFIX, SEGMENTS_SUFFIX};
use crate::error::{fail, CliResult, Stage, StageExt};

pub const SUMMARY: &str = "tune.json";

#[derive(Debug, Serialize)]
struct TierChoice {
    threshold_b: f64,
    threshold_o: f64,
    iou: f64,
    percentage: f64,
    default_iou: f64,
    default_percentage: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    tiers: BTreeMap<&'static str, TierChoice>,
}

fn dev_items(pairs: &[Pair], probs: Vec<ProbsFile>) -> CliResult<[Vec<DevItem>; 2]> {
    let mut items: [Vec<DevItem>; 2] = [Vec::new(), Vec::new()];
    for (pair, p) in pairs.iter().zip(probs) {
        let segments = data::load_segments(&pair.second)?;
        let t = p.num_frames();
        for tier in Tier::ALL {
            items[tier.index()].push(DevItem {
                rows: p.rows(tier).iter().map(|r| r.map(|v| 100.0 * v)).collect(),
                gold: data::gold_at(&segments, tier, p.fps, t),
            });
        }
    }
    Ok(items)
}

pub fn run(args: &TuneArgs, command: &Command, settings: &Settings) -> CliResult<()> {
    let grid = match &args.grid {
        Some(text) => parse_list(text)?,
        None => default_grid(),
    };
    if let Some(bad) = grid.iter().find(|v| !(0.0..=100.0).contains(*v)) {
        return Err(fail(Stage::Config, format!("grid value {bad} outside [0, 100]")));
    }
    let (pairs, probs) = match &args.model {
        Some(path) => {
            let model = load_checkpoint(path)?;
            let selector = settings.selector()?;
            let pairs = data::pair_files(&args.data, POSE_SUFFIX, &args.data, SEGMENTS_SUFFIX)?;
            let probs = data::par_map(settings.workers, &pairs, |pair| {
                let tiers = match predict_pose(&model, &pair.first, settings, &selector)? {
                    Some((_, p)) => ProbTiers { sign: p.sign, phrase: p.phrase },
                    None => ProbTiers::default(),
                };
                Ok(ProbsFile { fps: settings.fps, tiers })
            })?;
            (pairs, probs)
        }
        None => {
            let pairs = data::pair_files(&args.data, PROBS_SUFFIX, &args.data, SEGMENTS_SUFFIX)?;
            let probs = data::par_map(settings.workers, &pairs, |pair| data::load_probs(&pair.first))?;
            (pairs, probs)
        }
    };
    let items = dev_items(&pairs, probs)?;

    let mut summary = Summary { tiers: BTreeMap::new() };
    for tier in Tier::ALL {
        let dev = &items[tier.index()];
        let result = tune_thresholds(dev, &grid, tier).stage_with(Stage::Tune, || tier.to_string())?;
        let mut csv = String::from("threshold_b,threshold_o,iou,percentage\n");
        for row in &result.table {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                num(row.threshold_b),
                num(row.threshold_o),
                num(row.iou),
                num(row.percentage)
            );
        }
        data::write(&args.out.join(format!("tune_{}.csv", tier.name())), csv)?;
        let chosen = DecodeParams::thresholds(result.threshold_b, result.threshold_o);
        let (iou, percentage) = evaluate_params(dev, &chosen, tier);
        let (default_iou, default_percentage) = evaluate_params(dev, &DecodeParams::default(), tier);
        println!(
            "{tier}: threshold_b {} threshold_o {} (IoU {iou:.4}, % {percentage:.4}; default IoU {default_iou:.4}, % {default_percentage:.4})",
            result.threshold_b, result.threshold_o
        );
        summary.tiers.insert(
            tier.name(),
            TierChoice {
                threshold_b: result.threshold_b,
                threshold_o: result.threshold_o,
                iou,
                percentage,
                default_iou,
                default_percentage,
            },
        );
    }
    data::write_json(&args.out.join(SUMMARY), &summary)?;
    manifest_in(&args.out, command, settings)
}
