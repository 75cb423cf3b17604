#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use signseg::formats::{ProbTiers, ProbsFile, SegmentsFile};
use signseg::pose::serialize_pose_file;
use signseg::synthetic::{oversegmenting_dev_set, synthetic_sample, SyntheticSample};
use signseg::tags::Tier;

pub fn signseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signseg"))
        .args(args)
        .env_remove("SIGNSEG_CONFIG")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes `count` synthetic sequences as `seq<i>.pose.json` + `seq<i>.segments.json`.
pub fn write_synthetic_set(dir: &Path, count: usize, frames: usize, seed: u64) -> Vec<SyntheticSample> {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let s = synthetic_sample(frames, 25.0, &mut rng).unwrap();
            std::fs::write(dir.join(format!("seq{i}.pose.json")), serialize_pose_file(&s.pose).unwrap()).unwrap();
            let segs = SegmentsFile::new(25.0, &s.sign, &s.phrase);
            std::fs::write(dir.join(format!("seq{i}.segments.json")), segs.to_bytes().unwrap()).unwrap();
            s
        })
        .collect()
}

/// The over-segmenting decoder fixture as probs + segments files (same rows
/// and gold for both tiers).
pub fn write_overseg_set(dir: &Path, sequences: usize, seed: u64) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, item) in oversegmenting_dev_set(sequences, &mut rng).into_iter().enumerate() {
        let rows: Vec<[f64; 3]> = item.rows.iter().map(|r| r.map(|v| v / 100.0)).collect();
        let probs = ProbsFile {
            fps: 25.0,
            tiers: ProbTiers { sign: rows.clone(), phrase: rows },
        };
        std::fs::write(dir.join(format!("d{i}.probs.json")), probs.to_bytes().unwrap()).unwrap();
        let gold: Vec<_> = item.gold.iter().map(|s| signseg::tags::Segment::new(s.start, s.end, Tier::Sign)).collect();
        let segs = SegmentsFile::new(25.0, &gold, &item.gold);
        std::fs::write(dir.join(format!("d{i}.segments.json")), segs.to_bytes().unwrap()).unwrap();
    }
    dir.to_path_buf()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
