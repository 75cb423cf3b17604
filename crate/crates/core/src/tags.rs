//! Segments, per-frame BIO/IO tags and conversions between them.
//!
//! All intervals are half-open frame ranges `[start, end)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::round_half_away;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Sign,
    Phrase,
}

impl Tier {
    pub const ALL: [Tier; 2] = [Tier::Sign, Tier::Phrase];

    pub fn index(self) -> usize {
        match self {
            Tier::Sign => 0,
            Tier::Phrase => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tier::Sign => "sign",
            Tier::Phrase => "phrase",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    B,
    I,
    O,
}

impl Tag {
    pub const ALL: [Tag; 3] = [Tag::B, Tag::I, Tag::O];

    pub fn index(self) -> usize {
        match self {
            Tag::B => 0,
            Tag::I => 1,
            Tag::O => 2,
        }
    }

    pub fn from_index(i: usize) -> Tag {
        Tag::ALL[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    Bio,
    Io,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bio => "BIO",
            Scheme::Io => "IO",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub tier: Tier,
}

impl Segment {
    pub fn new(start: usize, end: usize, tier: Tier) -> Self {
        Segment { start, end, tier }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagSequence {
    pub tags: Vec<Tag>,
    pub tier: Tier,
    pub fps: f64,
}

impl TagSequence {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// Sorts segments and checks they are non-empty, on `tier`, inside
/// `[0, num_frames)` and pairwise disjoint.
fn check_segments(segments: &[Segment], num_frames: usize, tier: Tier) -> Result<Vec<Segment>> {
    let mut sorted = segments.to_vec();
    sorted.sort();
    for s in &sorted {
        if s.tier != tier {
            return Err(Error::Segments(format!(
                "segment [{}, {}) is on tier {} but {} was requested",
                s.start, s.end, s.tier, tier
            )));
        }
        if s.is_empty() || s.end > num_frames {
            return Err(Error::Segments(format!(
                "segment [{}, {}) is empty or outside [0, {num_frames})",
                s.start, s.end
            )));
        }
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(Error::Segments(format!(
                "segments [{}, {}) and [{}, {}) overlap",
                pair[0].start, pair[0].end, pair[1].start, pair[1].end
            )));
        }
    }
    Ok(sorted)
}

pub fn encode_tags(
    segments: &[Segment],
    num_frames: usize,
    tier: Tier,
    fps: f64,
    scheme: Scheme,
) -> Result<TagSequence> {
    let sorted = check_segments(segments, num_frames, tier)?;
    let mut tags = vec![Tag::O; num_frames];
    for s in sorted {
        tags[s.start..s.end].fill(Tag::I);
        if scheme == Scheme::Bio {
            tags[s.start] = Tag::B;
        }
    }
    Ok(TagSequence { tags, tier, fps })
}

/// Segments recovered from gold tags, plus the number of orphan `I` tags
/// (after `O` or at the start) that were treated as segment starts.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedTags {
    pub segments: Vec<Segment>,
    pub repairs: usize,
}

pub fn decode_gold_tags_with_repairs(tags: &TagSequence, scheme: Scheme) -> DecodedTags {
    let tier = tags.tier;
    let mut segments = Vec::new();
    let mut repairs = 0;
    let mut open: Option<usize> = None;
    for (i, &tag) in tags.tags.iter().enumerate() {
        match (scheme, tag) {
            (Scheme::Bio, Tag::B) => {
                if let Some(start) = open.take() {
                    segments.push(Segment::new(start, i, tier));
                }
                open = Some(i);
            }
            (Scheme::Bio, Tag::I) | (Scheme::Io, Tag::I | Tag::B) => {
                if open.is_none() {
                    if scheme == Scheme::Bio {
                        repairs += 1;
                    }
                    open = Some(i);
                }
            }
            (_, Tag::O) => {
                if let Some(start) = open.take() {
                    segments.push(Segment::new(start, i, tier));
                }
            }
        }
    }
    if let Some(start) = open {
        segments.push(Segment::new(start, tags.tags.len(), tier));
    }
    DecodedTags { segments, repairs }
}

pub fn decode_gold_tags(tags: &TagSequence, scheme: Scheme) -> Vec<Segment> {
    decode_gold_tags_with_repairs(tags, scheme).segments
}

/// Whether a tag sequence obeys the BIO grammar (no `I` after `O` or at the start).
pub fn is_valid_bio(tags: &[Tag]) -> bool {
    let mut prev = Tag::O;
    for &t in tags {
        if t == Tag::I && prev == Tag::O {
            return false;
        }
        prev = t;
    }
    true
}

/// Maps segments to another frame rate.
///
/// Boundaries are scaled and rounded half away from zero; a segment that
/// collapses keeps one frame at its new start, and segments that overlap at
/// the new rate are merged.
pub fn retime_segments(segments: &[Segment], src_fps: f64, dst_fps: f64) -> Vec<Segment> {
    if src_fps == dst_fps {
        return segments.to_vec();
    }
    let ratio = dst_fps / src_fps;
    let mut out: Vec<Segment> = segments
        .iter()
        .map(|s| {
            let start = round_half_away(s.start as f64 * ratio) as usize;
            let end = round_half_away(s.end as f64 * ratio) as usize;
            Segment::new(start, end.max(start + 1), s.tier)
        })
        .collect();
    out.sort();
    let mut merged: Vec<Segment> = Vec::with_capacity(out.len());
    for s in out {
        match merged.last_mut() {
            Some(last) if last.tier == s.tier && s.start < last.end => {
                last.end = last.end.max(s.end);
            }
            _ => merged.push(s),
        }
    }
    merged
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityRow {
    pub fps: f64,
    pub scheme: Scheme,
    /// Decoded segment count over gold segment count.
    pub reproduced_fraction: f64,
    /// Share of gold segments recovered with identical boundaries.
    pub exact_fraction: f64,
}

/// Round-trips gold segments through each frame rate and tagging scheme.
///
/// Each row retimes the gold to `fps`, encodes and decodes the tags at that
/// rate, and retimes the result back to `src_fps`. An empty gold list
/// reproduces fully.
pub fn fidelity_experiment(
    gold: &[Segment],
    fps_list: &[f64],
    src_fps: f64,
) -> Result<Vec<FidelityRow>> {
    let tier = gold.first().map(|s| s.tier).unwrap_or(Tier::Sign);
    let num_frames = gold.iter().map(|s| s.end).max().unwrap_or(0);
    let gold = check_segments(gold, num_frames, tier)?;
    let mut rows = Vec::with_capacity(fps_list.len() * 2);
    for &fps in fps_list {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidValue(format!("fps must be positive, got {fps}")));
        }
        let retimed = retime_segments(&gold, src_fps, fps);
        let frames = retimed.iter().map(|s| s.end).max().unwrap_or(0);
        for scheme in [Scheme::Bio, Scheme::Io] {
            let tags = encode_tags(&retimed, frames, tier, fps, scheme)?;
            let decoded = decode_gold_tags(&tags, scheme);
            let back = retime_segments(&decoded, fps, src_fps);
            let (reproduced_fraction, exact_fraction) = if gold.is_empty() {
                (1.0, 1.0)
            } else {
                let exact = gold.iter().filter(|g| back.binary_search(g).is_ok()).count();
                (
                    back.len() as f64 / gold.len() as f64,
                    exact as f64 / gold.len() as f64,
                )
            };
            rows.push(FidelityRow {
                fps,
                scheme,
                reproduced_fraction,
                exact_fraction,
            });
        }
    }
    Ok(rows)
}
