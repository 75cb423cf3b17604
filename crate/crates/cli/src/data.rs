//! File discovery, loading and the staged feature pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use signseg::features::{assemble_features, FeatureMatrix};
use signseg::formats::{ProbsFile, SegmentsFile};
use signseg::pose::{normalize_pose, parse_pose_file, resample_fps, select_points, PointSelector, PoseSequence};
use signseg::tags::{retime_segments, Segment, Tier};

use crate::config::Settings;
use crate::error::{fail, CliResult, Stage, StageExt};

pub const POSE_SUFFIX: &str = ".pose.json";
pub const SEGMENTS_SUFFIX: &str = ".segments.json";
pub const PROBS_SUFFIX: &str = ".probs.json";

/// File name without a known suffix (`a.pose.json` → `a`).
pub fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for suffix in [POSE_SUFFIX, SEGMENTS_SUFFIX, PROBS_SUFFIX, ".json"] {
        if let Some(s) = name.strip_suffix(suffix) {
            return s.to_string();
        }
    }
    path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or(name)
}

fn files_with_suffix(dir: &Path, suffix: &str) -> CliResult<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).stage_with(Stage::Load, || dir.display().to_string())?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.stage(Stage::Load)?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if let Some(s) = name.strip_suffix(suffix) {
            out.insert(s.to_string(), path);
        }
    }
    Ok(out)
}

/// A stem present in both `<stem><a>` and `<stem><b>` form.
#[derive(Debug, Clone)]
pub struct Pair {
    pub stem: String,
    pub first: PathBuf,
    pub second: PathBuf,
}

/// Pairs `<stem><first>` files in `first_dir` with `<stem><second>` files in
/// `second_dir`. Unpaired stems are all listed in the error.
pub fn pair_files(first_dir: &Path, first: &str, second_dir: &Path, second: &str) -> CliResult<Vec<Pair>> {
    let a = files_with_suffix(first_dir, first)?;
    let b = files_with_suffix(second_dir, second)?;
    let mut missing: Vec<String> = Vec::new();
    for s in a.keys().filter(|s| !b.contains_key(*s)) {
        missing.push(format!("{s}{first} has no {s}{second}"));
    }
    for s in b.keys().filter(|s| !a.contains_key(*s)) {
        missing.push(format!("{s}{second} has no {s}{first}"));
    }
    if !missing.is_empty() {
        return Err(fail(Stage::Load, format!("unpaired files: {}", missing.join("; "))));
    }
    if a.is_empty() {
        return Err(fail(
            Stage::Load,
            format!("no {first} / {second} pairs in {}", first_dir.display()),
        ));
    }
    Ok(a.into_iter()
        .map(|(stem, first)| {
            let second = b[&stem].clone();
            Pair { stem, first, second }
        })
        .collect())
}

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).stage_with(Stage::Load, || path.display().to_string())
}

pub fn load_pose(path: &Path) -> CliResult<PoseSequence> {
    parse_pose_file(&read(path)?).stage_with(Stage::Load, || path.display().to_string())
}

pub fn load_segments(path: &Path) -> CliResult<SegmentsFile> {
    SegmentsFile::parse(&read(path)?).stage_with(Stage::Load, || path.display().to_string())
}

pub fn load_probs(path: &Path) -> CliResult<ProbsFile> {
    ProbsFile::parse(&read(path)?).stage_with(Stage::Load, || path.display().to_string())
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).stage_with(Stage::Write, || parent.display().to_string())?;
    }
    fs::write(path, bytes).stage_with(Stage::Write, || path.display().to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).stage(Stage::Write)?;
    bytes.push(b'\n');
    write(path, bytes)
}

/// Resample, normalize, select and assemble, attributing errors to each stage.
/// Returns `None` for a sequence without frames.
pub fn features(
    seq: &PoseSequence,
    settings: &Settings,
    selector: &PointSelector,
    name: &str,
) -> CliResult<Option<FeatureMatrix>> {
    let seq = resample_fps(seq, settings.fps).stage_with(Stage::Resample, || name.to_string())?;
    if seq.num_frames() == 0 {
        return Ok(None);
    }
    let seq = normalize_pose(&seq).stage_with(Stage::Normalize, || name.to_string())?;
    let seq = select_points(&seq, selector).stage_with(Stage::Select, || name.to_string())?;
    assemble_features(&seq, settings.features)
        .map(Some)
        .stage_with(Stage::Features, || name.to_string())
}

/// Gold segments of one tier at `fps`, clipped to `num_frames`.
pub fn gold_at(file: &SegmentsFile, tier: Tier, fps: f64, num_frames: usize) -> Vec<Segment> {
    retime_segments(&file.segments(tier), file.fps, fps)
        .into_iter()
        .filter(|s| s.start < num_frames)
        .map(|s| Segment::new(s.start, s.end.min(num_frames), s.tier))
        .collect()
}

/// Maps `f` over `items` on a pool of `workers` threads, keeping input order.
/// The first error in input order wins.
pub fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .stage(Stage::Config)?;
    pool.install(|| items.par_iter().map(&f).collect::<Vec<_>>())
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(stem(Path::new("d/a.b.pose.json")), "a.b");
        assert_eq!(stem(Path::new("x.segments.json")), "x");
        assert_eq!(stem(Path::new("x.json")), "x");
        assert_eq!(stem(Path::new("x.txt")), "x");
    }

    #[test]
    fn pairing_lists_every_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.pose.json", "a.segments.json", "b.pose.json", "c.segments.json"] {
            fs::write(dir.path().join(name), "{}").unwrap();
        }
        let err = pair_files(dir.path(), POSE_SUFFIX, dir.path(), SEGMENTS_SUFFIX).unwrap_err();
        assert_eq!(err.stage, Stage::Load);
        assert!(err.message.contains("b.pose.json"), "{err}");
        assert!(err.message.contains("c.segments.json"), "{err}");

        fs::remove_file(dir.path().join("b.pose.json")).unwrap();
        fs::remove_file(dir.path().join("c.segments.json")).unwrap();
        let pairs = pair_files(dir.path(), POSE_SUFFIX, dir.path(), SEGMENTS_SUFFIX).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].stem, "a");
    }

    #[test]
    fn empty_dir_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(pair_files(dir.path(), POSE_SUFFIX, dir.path(), SEGMENTS_SUFFIX).is_err());
    }

    #[test]
    fn par_map_keeps_order_and_first_error() {
        let items: Vec<usize> = (0..50).collect();
        assert_eq!(par_map(4, &items, |&i| Ok(i * 2)).unwrap()[49], 98);
        let err = par_map(4, &items, |&i| if i % 10 == 3 { Err(fail(Stage::Eval, format!("{i}"))) } else { Ok(i) })
            .unwrap_err();
        assert_eq!(err.message, "3");
    }
}
