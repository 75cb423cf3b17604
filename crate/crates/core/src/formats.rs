//! Segment annotation files (`segments-json` v1) and WebVTT output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::round_half_away;
use crate::tags::{Segment, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentTiers {
    #[serde(default)]
    pub sign: Vec<Interval>,
    #[serde(default)]
    pub phrase: Vec<Interval>,
}

/// `{"fps": number, "tiers": {"sign": [...], "phrase": [...]}}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentsFile {
    pub fps: f64,
    pub tiers: SegmentTiers,
}

impl SegmentsFile {
    pub fn new(fps: f64, sign: &[Segment], phrase: &[Segment]) -> Self {
        let conv = |s: &[Segment]| s.iter().map(|s| Interval { start: s.start, end: s.end }).collect();
        SegmentsFile {
            fps,
            tiers: SegmentTiers {
                sign: conv(sign),
                phrase: conv(phrase),
            },
        }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let file: SegmentsFile =
            serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
        if !(file.fps.is_finite() && file.fps > 0.0) {
            return Err(Error::InvalidValue(format!("fps must be positive, got {}", file.fps)));
        }
        for (tier, list) in [(Tier::Sign, &file.tiers.sign), (Tier::Phrase, &file.tiers.phrase)] {
            if let Some(bad) = list.iter().find(|i| i.end <= i.start) {
                return Err(Error::Segments(format!(
                    "{tier} interval [{}, {}) is empty",
                    bad.start, bad.end
                )));
            }
        }
        Ok(file)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn segments(&self, tier: Tier) -> Vec<Segment> {
        let list = match tier {
            Tier::Sign => &self.tiers.sign,
            Tier::Phrase => &self.tiers.phrase,
        };
        list.iter().map(|i| Segment::new(i.start, i.end, tier)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbTiers {
    #[serde(default)]
    pub sign: Vec<[f64; 3]>,
    #[serde(default)]
    pub phrase: Vec<[f64; 3]>,
}

/// Per-frame B, I, O probabilities: `{"fps": number, "tiers": {"sign": [[b, i, o], ...], "phrase": [...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbsFile {
    pub fps: f64,
    pub tiers: ProbTiers,
}

impl ProbsFile {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let file: ProbsFile =
            serde_json::from_slice(bytes).map_err(|e| Error::Malformed(e.to_string()))?;
        if !(file.fps.is_finite() && file.fps > 0.0) {
            return Err(Error::InvalidValue(format!("fps must be positive, got {}", file.fps)));
        }
        if file.tiers.sign.len() != file.tiers.phrase.len() {
            return Err(Error::Dimension(format!(
                "{} sign rows vs {} phrase rows",
                file.tiers.sign.len(),
                file.tiers.phrase.len()
            )));
        }
        for row in file.tiers.sign.iter().chain(&file.tiers.phrase) {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-4 {
                return Err(Error::InvalidValue(format!("{row:?} is not a probability row")));
            }
        }
        Ok(file)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn num_frames(&self) -> usize {
        self.tiers.sign.len()
    }

    pub fn rows(&self, tier: Tier) -> &[[f64; 3]] {
        match tier {
            Tier::Sign => &self.tiers.sign,
            Tier::Phrase => &self.tiers.phrase,
        }
    }
}

/// `HH:MM:SS.mmm` for a frame boundary.
pub fn vtt_timestamp(frame: usize, fps: f64) -> String {
    let total_ms = round_half_away(frame as f64 * 1000.0 / fps) as u64;
    let ms = total_ms % 1000;
    let s = total_ms / 1000;
    format!("{:02}:{:02}:{:02}.{:03}", s / 3600, (s / 60) % 60, s % 60, ms)
}

/// One cue per segment, labelled with its tier and ordinal.
pub fn write_vtt(segments: &[Segment], fps: f64) -> String {
    let mut out = String::from("WEBVTT\n");
    for (i, s) in segments.iter().enumerate() {
        out.push_str(&format!(
            "\n{}\n{} --> {}\n{} {}\n",
            i + 1,
            vtt_timestamp(s.start, fps),
            vtt_timestamp(s.end, fps),
            s.tier,
            i + 1
        ));
    }
    out
}
