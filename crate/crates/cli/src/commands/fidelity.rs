use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use signseg::synthetic::segment_corpus;
use signseg::tags::{fidelity_experiment, Scheme, Segment, Tier};

use super::{num, write_manifest};
use crate::args::{Command, FidelityArgs, TierArg};
use crate::config::{parse_list, Settings};
use crate::data::{self, SEGMENTS_SUFFIX};
use crate::error::{fail, CliResult, Stage, StageExt};

/// Pooled result for one frame rate and scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledRow {
    pub fps: f64,
    pub scheme: Scheme,
    pub fraction: f64,
    pub exact: f64,
}

fn gold_sets(path: &Path, tier: Tier) -> CliResult<Vec<(Vec<Segment>, f64)>> {
    let files: Vec<_> = if path.is_dir() {
        let entries = std::fs::read_dir(path).stage_with(Stage::Load, || path.display().to_string())?;
        let mut files = Vec::new();
        for entry in entries {
            let p = entry.stage(Stage::Load)?.path();
            if p.to_string_lossy().ends_with(SEGMENTS_SUFFIX) {
                files.push(p);
            }
        }
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(fail(Stage::Load, format!("no {SEGMENTS_SUFFIX} files in {}", path.display())));
    }
    files
        .iter()
        .map(|f| data::load_segments(f).map(|s| (s.segments(tier), s.fps)))
        .collect()
}

/// Runs the round trip on each gold set and pools counts across sets.
pub fn pooled_fidelity(sets: &[(Vec<Segment>, f64)], rates: &[f64]) -> CliResult<Vec<PooledRow>> {
    let total: usize = sets.iter().map(|(g, _)| g.len()).sum();
    let mut rows: Vec<PooledRow> = Vec::new();
    for (gold, src_fps) in sets {
        let result = fidelity_experiment(gold, rates, *src_fps).stage(Stage::Eval)?;
        let weight = if total == 0 { 1.0 / sets.len() as f64 } else { gold.len() as f64 / total as f64 };
        for (i, r) in result.iter().enumerate() {
            if rows.len() <= i {
                rows.push(PooledRow { fps: r.fps, scheme: r.scheme, fraction: 0.0, exact: 0.0 });
            }
            rows[i].fraction += weight * r.reproduced_fraction;
            rows[i].exact += weight * r.exact_fraction;
        }
    }
    Ok(rows)
}

pub fn run(args: &FidelityArgs, command: &Command, settings: &Settings) -> CliResult<()> {
    let tier = match args.tier {
        TierArg::Sign => Tier::Sign,
        TierArg::Phrase => Tier::Phrase,
    };
    let rates = parse_list(&args.rates)?;
    let sets = match (&args.gold, args.synthetic) {
        (Some(path), _) => gold_sets(path, tier)?,
        (None, Some(count)) => {
            if !(0.0..=1.0).contains(&args.adjacency) {
                return Err(fail(Stage::Config, format!("adjacency {} outside [0, 1]", args.adjacency)));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            vec![(segment_corpus(count, args.adjacency, tier, &mut rng), args.source_fps)]
        }
        (None, None) => return Err(fail(Stage::Config, "bio-fidelity needs --gold or --synthetic")),
    };
    let rows = pooled_fidelity(&sets, &rates)?;
    let mut csv = String::from("fps,scheme,fraction,exact\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{}", num(r.fps), r.scheme, num(r.fraction), num(r.exact));
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
