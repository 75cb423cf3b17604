//! Frame- and segment-level evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::{Segment, Tag};

/// Macro-averaged F1 over B, I and O. A class that appears in neither
/// sequence scores 1.
pub fn frame_f1(pred: &[Tag], gold: &[Tag]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::Dimension(format!(
            "{} predicted tags vs {} gold tags",
            pred.len(),
            gold.len()
        )));
    }
    let mut tp = [0usize; 3];
    let mut fp = [0usize; 3];
    let mut fn_ = [0usize; 3];
    for (&p, &g) in pred.iter().zip(gold) {
        if p == g {
            tp[p.index()] += 1;
        } else {
            fp[p.index()] += 1;
            fn_[g.index()] += 1;
        }
    }
    let f1 = (0..3).map(|c| {
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        if denom == 0 {
            1.0
        } else {
            2.0 * tp[c] as f64 / denom as f64
        }
    });
    Ok(f1.sum::<f64>() / 3.0)
}

fn coverage(segments: &[Segment], num_frames: usize) -> Vec<bool> {
    let mut covered = vec![false; num_frames];
    for s in segments {
        let end = s.end.min(num_frames);
        if s.start < end {
            covered[s.start..end].fill(true);
        }
    }
    covered
}

/// Intersection and union sizes of the frames covered by each segment list.
pub fn overlap_counts(pred: &[Segment], gold: &[Segment], num_frames: usize) -> (usize, usize) {
    let p = coverage(pred, num_frames);
    let g = coverage(gold, num_frames);
    p.iter().zip(&g).fold((0, 0), |(i, u), (&a, &b)| {
        (i + (a && b) as usize, u + (a || b) as usize)
    })
}

/// IoU of the frame unions; 1 when both lists are empty.
pub fn segment_iou(pred: &[Segment], gold: &[Segment], num_frames: usize) -> f64 {
    let (inter, union) = overlap_counts(pred, gold, num_frames);
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Predicted over gold segment count.
pub fn percentage(pred: &[Segment], gold: &[Segment]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Segments("percentage needs at least one gold segment".into()));
    }
    Ok(pred.len() as f64 / gold.len() as f64)
}

/// ROC-AUC of the O probability against `gold == O`, via the rank-sum
/// statistic with tied scores sharing their average rank.
pub fn roc_auc_o(o_scores: &[f64], gold: &[Tag]) -> Result<f64> {
    if o_scores.len() != gold.len() {
        return Err(Error::Dimension(format!(
            "{} scores vs {} gold tags",
            o_scores.len(),
            gold.len()
        )));
    }
    let positives = gold.iter().filter(|&&t| t == Tag::O).count();
    let negatives = gold.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidValue(
            "ROC-AUC needs both O and non-O frames in gold".into(),
        ));
    }
    let mut order: Vec<usize> = (0..o_scores.len()).collect();
    order.sort_by(|&a, &b| o_scores[a].total_cmp(&o_scores[b]));
    // Twice the rank sum keeps tied (half) ranks integral.
    let mut rank_sum_x2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && o_scores[order[j + 1]] == o_scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged
        let avg_x2 = (i + 1 + j + 1) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| gold[k] == Tag::O).count() as u64;
        rank_sum_x2 += avg_x2 * pos_in_group;
        i = j + 1;
    }
    let p = positives as u64;
    let u_x2 = rank_sum_x2 - p * (p + 1);
    Ok(u_x2 as f64 / (2.0 * positives as f64 * negatives as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges in seconds; `edges.len() == density.len() + 1`.
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .zip(self.edges.windows(2))
            .map(|(d, e)| d * (e[1] - e[0]))
            .sum()
    }
}

/// Density histogram of segment durations in seconds over `bins` equal bins
/// spanning `[0, max_seconds]` (default: the longest duration). Longer
/// segments land in the last bin.
pub fn length_density(
    segments: &[Segment],
    fps: f64,
    bins: usize,
    max_seconds: Option<f64>,
) -> Result<Histogram> {
    if segments.is_empty() {
        return Err(Error::Segments("length density needs at least one segment".into()));
    }
    if bins == 0 || !(fps > 0.0) {
        return Err(Error::InvalidValue(format!("bins = {bins}, fps = {fps}")));
    }
    let durations: Vec<f64> = segments.iter().map(|s| s.len() as f64 / fps).collect();
    let max = max_seconds.unwrap_or_else(|| durations.iter().cloned().fold(0.0, f64::max));
    let max = if max > 0.0 { max } else { 1.0 / fps };
    let width = max / bins as f64;
    let mut counts = vec![0usize; bins];
    for d in &durations {
        let b = ((d / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = durations.len() as f64;
    Ok(Histogram {
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
    })
}
