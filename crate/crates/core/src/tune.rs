//! Grid search over decoder thresholds on a development set.

use std::cmp::Ordering;

use serde::Serialize;

use crate::decode::{greedy_decode, DecodeParams};
use crate::error::{Error, Result};
use crate::metrics::overlap_counts;
use crate::tags::{Segment, Tier};

/// One development sequence: probability rows on the 0–100 scale and gold segments.
#[derive(Debug, Clone)]
pub struct DevItem {
    pub rows: Vec<[f64; 3]>,
    pub gold: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneRow {
    pub threshold_b: f64,
    pub threshold_o: f64,
    pub iou: f64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub tier: Tier,
    pub threshold_b: f64,
    pub threshold_o: f64,
    pub table: Vec<TuneRow>,
}

pub fn default_grid() -> Vec<f64> {
    (1..=9).map(|i| (i * 10) as f64).collect()
}

/// IoU pooled over all sequences and the pooled predicted/gold count ratio.
pub fn evaluate_params(dev: &[DevItem], params: &DecodeParams, tier: Tier) -> (f64, f64) {
    let (mut inter, mut union, mut pred, mut gold) = (0, 0, 0, 0);
    for item in dev {
        let segs = greedy_decode(&item.rows, params, tier);
        let (i, u) = overlap_counts(&segs, &item.gold, item.rows.len());
        inter += i;
        union += u;
        pred += segs.len();
        gold += item.gold.len();
    }
    let iou = if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    let pct = if gold == 0 { f64::INFINITY } else { pred as f64 / gold as f64 };
    (iou, pct)
}

/// Higher IoU wins, then |percentage − 1| closer to 0, then the smaller (b, o) pair.
fn better(a: &TuneRow, b: &TuneRow) -> bool {
    let by_iou = a.iou.total_cmp(&b.iou);
    if by_iou != Ordering::Equal {
        return by_iou == Ordering::Greater;
    }
    let da = (a.percentage - 1.0).abs();
    let db = (b.percentage - 1.0).abs();
    match da.total_cmp(&db) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            (a.threshold_b, a.threshold_o) < (b.threshold_b, b.threshold_o)
        }
    }
}

/// Exhaustive search of `grid × grid` threshold pairs, evaluated in grid order.
pub fn tune_thresholds(dev: &[DevItem], grid: &[f64], tier: Tier) -> Result<TuneResult> {
    if dev.is_empty() {
        return Err(Error::InvalidValue("tuning needs a non-empty development set".into()));
    }
    if dev.iter().all(|d| d.gold.is_empty()) {
        return Err(Error::Segments("development set has no gold segments".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidValue("empty threshold grid".into()));
    }
    let mut table = Vec::with_capacity(grid.len() * grid.len());
    for &b in grid {
        for &o in grid {
            let params = DecodeParams::thresholds(b, o);
            params.validate()?;
            let (iou, percentage) = evaluate_params(dev, &params, tier);
            table.push(TuneRow {
                threshold_b: b,
                threshold_o: o,
                iou,
                percentage,
            });
        }
    }
    let best = table
        .iter()
        .skip(1)
        .fold(&table[0], |best, row| if better(row, best) { row } else { best });
    Ok(TuneResult {
        tier,
        threshold_b: best.threshold_b,
        threshold_o: best.threshold_o,
        table,
    })
}
