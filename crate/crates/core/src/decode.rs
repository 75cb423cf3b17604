//! Turning per-frame B/I/O probabilities into segments.
//!
//! Rows are `[b, i, o]` on a 0–100 scale. The threshold decoder follows the
//! greedy procedure used by the reference models: a segment opens at the
//! first frame whose `b` exceeds `threshold_b`; once `b` has dropped below
//! `threshold_b`, the segment closes before the first frame whose `b` or `o`
//! exceeds its threshold. The closing frame does not open a new segment
//! unless `strict_bio` is set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::{Segment, Tag, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    #[default]
    Threshold,
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub threshold_b: f64,
    pub threshold_o: f64,
    pub mode: DecodeMode,
    /// Reopen a segment at a B frame that closes the previous one.
    #[serde(default)]
    pub strict_bio: bool,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            threshold_b: 50.0,
            threshold_o: 50.0,
            mode: DecodeMode::Threshold,
            strict_bio: false,
        }
    }
}

impl DecodeParams {
    pub fn thresholds(threshold_b: f64, threshold_o: f64) -> Self {
        DecodeParams {
            threshold_b,
            threshold_o,
            ..Default::default()
        }
    }

    pub fn argmax() -> Self {
        DecodeParams {
            mode: DecodeMode::Argmax,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("threshold_b", self.threshold_b), ("threshold_o", self.threshold_o)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::InvalidValue(format!("{name} = {v} outside [0, 100]")));
            }
        }
        Ok(())
    }
}

/// Greedy threshold decoding.
pub fn greedy_decode(rows: &[[f64; 3]], params: &DecodeParams, tier: Tier) -> Vec<Segment> {
    let (tb, to) = (params.threshold_b, params.threshold_o);
    let mut segments = Vec::new();
    let mut start: Option<usize> = None;
    let mut did_pass_start = false;
    for (i, &[b, _, o]) in rows.iter().enumerate() {
        match start {
            None => {
                if b > tb {
                    start = Some(i);
                }
            }
            Some(s) if did_pass_start => {
                if b > tb || o > to {
                    segments.push(Segment::new(s, i, tier));
                    did_pass_start = false;
                    start = (params.strict_bio && b > tb).then_some(i);
                }
            }
            Some(_) => {
                if b < tb {
                    did_pass_start = true;
                }
            }
        }
    }
    if let Some(s) = start {
        segments.push(Segment::new(s, rows.len(), tier));
    }
    segments
}

/// Most likely class of a row; ties resolve in B, I, O order.
pub fn argmax_tag(row: &[f64; 3]) -> Tag {
    let mut best = 0;
    for c in 1..3 {
        if row[c] > row[best] {
            best = c;
        }
    }
    Tag::from_index(best)
}

/// Decoding on per-frame argmax classes: every B starts a segment (closing
/// any open one), O closes, I extends an open segment and is ignored otherwise.
pub fn argmax_decode(rows: &[[f64; 3]], tier: Tier) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut start: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        match argmax_tag(row) {
            Tag::B => {
                if let Some(s) = start.replace(i) {
                    segments.push(Segment::new(s, i, tier));
                }
            }
            Tag::O => {
                if let Some(s) = start.take() {
                    segments.push(Segment::new(s, i, tier));
                }
            }
            Tag::I => {}
        }
    }
    if let Some(s) = start {
        segments.push(Segment::new(s, rows.len(), tier));
    }
    segments
}

pub fn decode(rows: &[[f64; 3]], params: &DecodeParams, tier: Tier) -> Vec<Segment> {
    match params.mode {
        DecodeMode::Threshold => greedy_decode(rows, params, tier),
        DecodeMode::Argmax => argmax_decode(rows, tier),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(start: usize, end: usize) -> Segment {
        Segment::new(start, end, Tier::Sign)
    }

    #[test]
    fn greedy_hand_trace() {
        let rows = [
            [10.0, 10.0, 80.0],
            [90.0, 5.0, 5.0],
            [10.0, 80.0, 10.0],
            [10.0, 80.0, 10.0],
            [5.0, 15.0, 80.0],
        ];
        assert_eq!(greedy_decode(&rows, &DecodeParams::default(), Tier::Sign), vec![seg(1, 4)]);
    }

    #[test]
    fn greedy_all_outside() {
        let rows = [[0.0, 0.0, 100.0]; 6];
        assert!(greedy_decode(&rows, &DecodeParams::default(), Tier::Sign).is_empty());
    }

    #[test]
    fn greedy_does_not_reopen_on_closing_b() {
        let rows = [
            [90.0, 5.0, 5.0],
            [10.0, 80.0, 10.0],
            [90.0, 5.0, 5.0],
            [10.0, 80.0, 10.0],
        ];
        let p = DecodeParams::default();
        assert_eq!(greedy_decode(&rows, &p, Tier::Sign), vec![seg(0, 2)]);
        let strict = DecodeParams { strict_bio: true, ..p };
        assert_eq!(greedy_decode(&rows, &strict, Tier::Sign), vec![seg(0, 2), seg(2, 4)]);
    }

    #[test]
    fn greedy_open_segment_runs_to_end() {
        let rows = [[0.0, 0.0, 100.0], [80.0, 20.0, 0.0], [0.0, 100.0, 0.0]];
        assert_eq!(greedy_decode(&rows, &DecodeParams::default(), Tier::Sign), vec![seg(1, 3)]);
    }

    #[test]
    fn pass_start_needs_b_strictly_below() {
        // b == threshold does not arm the closing check
        let rows = [[60.0, 0.0, 40.0], [50.0, 0.0, 50.0], [0.0, 0.0, 100.0], [0.0, 0.0, 100.0]];
        assert_eq!(greedy_decode(&rows, &DecodeParams::default(), Tier::Sign), vec![seg(0, 3)]);
    }

    #[test]
    fn argmax_cases() {
        let rows = [[0.0, 100.0, 0.0]; 4];
        assert!(argmax_decode(&rows, Tier::Sign).is_empty());
        let third = 100.0 / 3.0;
        let uniform = [[third; 3]; 3];
        assert_eq!(argmax_tag(&uniform[0]), Tag::B);
        assert_eq!(argmax_decode(&uniform, Tier::Sign), vec![seg(0, 1), seg(1, 2), seg(2, 3)]);
        let rows = [
            [100.0, 0.0, 0.0],
            [0.0, 100.0, 0.0],
            [100.0, 0.0, 0.0],
            [0.0, 0.0, 100.0],
        ];
        assert_eq!(argmax_decode(&rows, Tier::Sign), vec![seg(0, 2), seg(2, 3)]);
        assert_eq!(decode(&rows, &DecodeParams::argmax(), Tier::Sign), vec![seg(0, 2), seg(2, 3)]);
    }

    #[test]
    fn params_validation() {
        assert!(DecodeParams::thresholds(0.0, 100.0).validate().is_ok());
        assert!(DecodeParams::thresholds(-1.0, 50.0).validate().is_err());
        assert!(DecodeParams::thresholds(50.0, 100.5).validate().is_err());
    }

    fn arb_rows() -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 0..60).prop_map(|v| {
            v.into_iter()
                .map(|(a, b, c)| {
                    let s = a + b + c + 1e-9;
                    [100.0 * a / s, 100.0 * b / s, 100.0 * c / s]
                })
                .collect()
        })
    }

    /// Streams whose B column never sits strictly between the two thresholds.
    fn arb_bimodal_rows(lo: f64, hi: f64) -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec((any::<bool>(), 0.0f64..1.0, 0.0f64..100.0), 0..60).prop_map(
            move |v| {
                v.into_iter()
                    .map(|(high, frac, o)| {
                        let b = if high { hi + 1.0 + frac * (99.0 - hi) } else { frac * lo };
                        let rest = 100.0 - b;
                        let o = o.min(rest);
                        [b, rest - o, o]
                    })
                    .collect()
            },
        )
    }

    proptest! {
        #[test]
        fn greedy_segments_are_ordered_and_disjoint(rows in arb_rows(), tb in 1.0f64..99.0, to in 1.0f64..99.0) {
            for strict in [false, true] {
                let p = DecodeParams { strict_bio: strict, ..DecodeParams::thresholds(tb, to) };
                let segs = greedy_decode(&rows, &p, Tier::Phrase);
                for s in &segs {
                    prop_assert!(s.start < s.end && s.end <= rows.len());
                }
                for w in segs.windows(2) {
                    prop_assert!(w[0].end <= w[1].start);
                }
            }
        }

        #[test]
        fn raising_threshold_b_on_bimodal_streams(rows in arb_bimodal_rows(30.0, 70.0), to in 1.0f64..99.0) {
            let low = greedy_decode(&rows, &DecodeParams::thresholds(30.0, to), Tier::Sign).len();
            let high = greedy_decode(&rows, &DecodeParams::thresholds(70.0, to), Tier::Sign).len();
            prop_assert!(high <= low);
        }
    }

    /// A higher `threshold_b` can arm the closing check earlier and so
    /// produce more segments on general streams.
    #[test]
    fn raising_threshold_b_can_add_segments() {
        let rows = [
            [100.0, 0.0, 0.0],
            [55.0, 45.0, 0.0],
            [100.0, 0.0, 0.0],
            [100.0, 0.0, 0.0],
            [0.0, 100.0, 0.0],
            [0.0, 0.0, 100.0],
        ];
        let at = |tb| greedy_decode(&rows, &DecodeParams::thresholds(tb, 50.0), Tier::Sign).len();
        assert_eq!(at(50.0), 1);
        assert_eq!(at(60.0), 2);
    }
}
