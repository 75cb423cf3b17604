//! Per-tier evaluation pooled over a set of sequences.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::decode::argmax_tag;
use crate::error::{Error, Result};
use crate::metrics::{frame_f1, length_density, overlap_counts, roc_auc_o, Histogram};
use crate::tags::{encode_tags, Scheme, Segment, Tag, Tier};

/// Bins used for the segment-length histogram.
pub const LENGTH_BINS: usize = 20;

/// One sequence of one tier.
#[derive(Debug, Clone)]
pub struct EvalInput {
    pub num_frames: usize,
    pub pred: Vec<Segment>,
    pub gold: Vec<Segment>,
    /// Frame probabilities (0–1). Frame tags come from their argmax when
    /// present and from the predicted segments otherwise.
    pub probs: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub frame_f1: f64,
    pub iou: f64,
    /// `None` when there are no gold segments.
    pub percentage: Option<f64>,
    /// `None` without probabilities or when gold has a single class.
    pub roc_auc_o: Option<f64>,
    /// Predicted segment durations; `None` when nothing was predicted.
    pub segment_length_density: Option<Histogram>,
    pub predicted_segments: usize,
    pub gold_segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub fps: f64,
    pub sequences: usize,
    pub sign: TierReport,
    pub phrase: TierReport,
}

pub fn tier_report(items: &[EvalInput], tier: Tier, fps: f64) -> Result<TierReport> {
    let mut pred_tags: Vec<Tag> = Vec::new();
    let mut gold_tags: Vec<Tag> = Vec::new();
    let mut o_scores = Vec::new();
    let mut all_probs = true;
    let (mut inter, mut union) = (0, 0);
    let mut pred_segments = Vec::new();
    let mut gold_count = 0;
    for item in items {
        let gold = encode_tags(&item.gold, item.num_frames, tier, fps, Scheme::Bio)?.tags;
        let pred = match &item.probs {
            Some(rows) => {
                if rows.len() != item.num_frames {
                    return Err(Error::Dimension(format!(
                        "{} probability rows for {} frames",
                        rows.len(),
                        item.num_frames
                    )));
                }
                o_scores.extend(rows.iter().map(|r| r[2]));
                rows.iter().map(argmax_tag).collect()
            }
            None => {
                all_probs = false;
                encode_tags(&item.pred, item.num_frames, tier, fps, Scheme::Bio)?.tags
            }
        };
        pred_tags.extend(pred);
        gold_tags.extend(gold);
        let (i, u) = overlap_counts(&item.pred, &item.gold, item.num_frames);
        inter += i;
        union += u;
        pred_segments.extend_from_slice(&item.pred);
        gold_count += item.gold.len();
    }
    let roc = if all_probs && !items.is_empty() {
        roc_auc_o(&o_scores, &gold_tags).ok()
    } else {
        None
    };
    Ok(TierReport {
        frame_f1: frame_f1(&pred_tags, &gold_tags)?,
        iou: if union == 0 { 1.0 } else { inter as f64 / union as f64 },
        percentage: (gold_count > 0).then(|| pred_segments.len() as f64 / gold_count as f64),
        roc_auc_o: roc,
        segment_length_density: length_density(&pred_segments, fps, LENGTH_BINS, None).ok(),
        predicted_segments: pred_segments.len(),
        gold_segments: gold_count,
    })
}

impl EvalReport {
    /// `items` holds `[sign, phrase]` inputs per sequence.
    pub fn build(items: &[[EvalInput; 2]], fps: f64) -> Result<Self> {
        let tier = |t: Tier| -> Result<TierReport> {
            let inputs: Vec<EvalInput> = items.iter().map(|i| i[t.index()].clone()).collect();
            tier_report(&inputs, t, fps)
        };
        Ok(EvalReport {
            fps,
            sequences: items.len(),
            sign: tier(Tier::Sign)?,
            phrase: tier(Tier::Phrase)?,
        })
    }

    pub fn tier(&self, tier: Tier) -> &TierReport {
        match tier {
            Tier::Sign => &self.sign,
            Tier::Phrase => &self.phrase,
        }
    }

    pub fn table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let mut out = format!(
            "{:<8} {:>8} {:>8} {:>10} {:>8} {:>6} {:>6}\n",
            "tier", "f1", "iou", "percentage", "auc_o", "pred", "gold"
        );
        for t in Tier::ALL {
            let r = self.tier(t);
            let _ = writeln!(
                out,
                "{:<8} {:>8.4} {:>8.4} {:>10} {:>8} {:>6} {:>6}",
                t.name(),
                r.frame_f1,
                r.iou,
                opt(r.percentage),
                opt(r.roc_auc_o),
                r.predicted_segments,
                r.gold_segments
            );
        }
        out
    }
}
