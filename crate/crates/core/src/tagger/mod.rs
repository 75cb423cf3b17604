//! Bidirectional LSTM frame tagger with one BIO head per tier.
//!
//! Parameters are stored as f64 but always hold f32-representable values, so
//! checkpoints (32-bit on disk) round-trip exactly.

mod checkpoint;
mod gradcheck;
mod model;
mod optim;
mod train;

use serde::{Deserialize, Serialize};

use crate::decode::argmax_tag;
use crate::error::{Error, Result};
use crate::tags::{encode_tags, Scheme, Segment, Tag, Tier};

pub use checkpoint::{load_model, model_from_bytes, model_to_bytes, save_model, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, gradient_check_with, GradCheckReport};
pub use model::{ForwardCache, Gradients, Param, TaggerModel};
pub use optim::{train_step, Adam};
pub use train::{evaluate_f1, fit, FitOptions, FitReport, LogRow, TrainExample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub bidirectional: bool,
    pub learning_rate: f64,
    /// `[sign, phrase]`, each in B, I, O order.
    pub class_weights: [[f64; 3]; 2],
    pub seed: u64,
    /// Inverted dropout on every LSTM layer input during training.
    #[serde(default)]
    pub dropout: f64,
    /// Global gradient-norm clip.
    #[serde(default)]
    pub grad_clip: Option<f64>,
}

impl TaggerConfig {
    pub fn new(input_dim: usize) -> Self {
        TaggerConfig {
            input_dim,
            hidden_dim: 256,
            layers: 4,
            bidirectional: true,
            learning_rate: 1e-3,
            class_weights: [[1.0; 3]; 2],
            seed: 0,
            dropout: 0.0,
            grad_clip: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("hidden_dim", self.hidden_dim),
            ("layers", self.layers),
        ] {
            if v == 0 {
                return Err(Error::InvalidValue(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidValue(format!("learning_rate = {}", self.learning_rate)));
        }
        if self.class_weights.iter().flatten().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidValue(format!(
                "class weights must be positive: {:?}",
                self.class_weights
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidValue(format!("dropout = {}", self.dropout)));
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidValue(format!("grad_clip = {c}")));
            }
        }
        Ok(())
    }

    pub fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    /// Width of the encoder output fed to the heads.
    pub fn encoder_dim(&self) -> usize {
        self.directions() * self.hidden_dim
    }

    /// `F·H + H + dirs·4H(F'+H+1) summed over layers + 2·(3·D + 3)` where the
    /// first layer reads `F' = H` and later layers `F' = D = dirs·H`.
    pub fn parameter_count(&self) -> usize {
        let (f, h, dirs) = (self.input_dim, self.hidden_dim, self.directions());
        let d = dirs * h;
        f * h
            + h
            + dirs * 4 * h * (h + h + 1)
            + self.layers.saturating_sub(1) * dirs * 4 * h * (d + h + 1)
            + 2 * (3 * d + 3)
    }
}

pub const PARAMETER_COUNT_FORMULA: &str =
    "F*H + H + dirs*4H*(2H+1) + (layers-1)*dirs*4H*(dirs*H+H+1) + 2*(3*dirs*H+3)";

/// Gold tags for both tiers of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldTags {
    pub sign: Vec<Tag>,
    pub phrase: Vec<Tag>,
}

impl GoldTags {
    pub fn from_segments(sign: &[Segment], phrase: &[Segment], num_frames: usize) -> Result<Self> {
        let enc = |s, tier| encode_tags(s, num_frames, tier, 1.0, Scheme::Bio).map(|t| t.tags);
        Ok(GoldTags {
            sign: enc(sign, Tier::Sign)?,
            phrase: enc(phrase, Tier::Phrase)?,
        })
    }

    pub fn tier(&self, tier: Tier) -> &[Tag] {
        match tier {
            Tier::Sign => &self.sign,
            Tier::Phrase => &self.phrase,
        }
    }

    pub fn len(&self) -> usize {
        self.sign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sign.is_empty()
    }
}

/// Per-tier `T × 3` probability rows in B, I, O order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameProbs {
    pub sign: Vec<[f64; 3]>,
    pub phrase: Vec<[f64; 3]>,
}

impl FrameProbs {
    pub fn num_frames(&self) -> usize {
        self.sign.len()
    }

    pub fn tier(&self, tier: Tier) -> &[[f64; 3]] {
        match tier {
            Tier::Sign => &self.sign,
            Tier::Phrase => &self.phrase,
        }
    }

    /// Rows on the 0–100 scale expected by the decoders.
    pub fn scaled(&self, tier: Tier) -> Vec<[f64; 3]> {
        self.tier(tier).iter().map(|r| r.map(|p| 100.0 * p)).collect()
    }

    pub fn argmax_tags(&self, tier: Tier) -> Vec<Tag> {
        self.tier(tier).iter().map(argmax_tag).collect()
    }
}

/// `w_c = total / (3 · count_c)`; a class that never occurs gets weight 1.
pub fn class_weights_from_counts(counts: [usize; 3]) -> [f64; 3] {
    let total: usize = counts.iter().sum();
    counts.map(|c| if c == 0 { 1.0 } else { total as f64 / (3.0 * c as f64) })
}

/// Class weights for both tiers from the tag frequencies of a training corpus.
pub fn class_weights_from_corpus<'a>(gold: impl IntoIterator<Item = &'a GoldTags>) -> [[f64; 3]; 2] {
    let mut counts = [[0usize; 3]; 2];
    for g in gold {
        for tier in Tier::ALL {
            for t in g.tier(tier) {
                counts[tier.index()][t.index()] += 1;
            }
        }
    }
    counts.map(class_weights_from_counts)
}

/// Sum over tiers of the per-frame mean of `−w[gold] · ln p[gold]`.
pub fn loss(probs: &FrameProbs, gold: &GoldTags, weights: &[[f64; 3]; 2]) -> Result<f64> {
    check_lengths(probs.num_frames(), gold)?;
    let t = probs.num_frames();
    if t == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for tier in Tier::ALL {
        let w = &weights[tier.index()];
        let sum: f64 = probs
            .tier(tier)
            .iter()
            .zip(gold.tier(tier))
            .map(|(row, g)| -w[g.index()] * row[g.index()].ln())
            .sum();
        total += sum / t as f64;
    }
    Ok(total)
}

pub(crate) fn check_lengths(num_frames: usize, gold: &GoldTags) -> Result<()> {
    if gold.sign.len() != num_frames || gold.phrase.len() != num_frames {
        return Err(Error::Dimension(format!(
            "{num_frames} frames vs {} sign / {} phrase gold tags",
            gold.sign.len(),
            gold.phrase.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_formula() {
        let c = TaggerConfig::new(300);
        // projection, first layer, three deeper layers, two heads
        let by_hand = 300 * 256 + 256
            + 2 * (4 * 256 * 256 + 4 * 256 * 256 + 4 * 256)
            + 3 * 2 * (4 * 256 * 512 + 4 * 256 * 256 + 4 * 256)
            + 2 * (3 * 512 + 3);
        assert_eq!(c.parameter_count(), by_hand);
        assert_eq!(c.parameter_count(), 5_855_494);
    }

    #[test]
    fn validation() {
        assert!(TaggerConfig::new(10).validate().is_ok());
        let mut c = TaggerConfig::new(10);
        c.hidden_dim = 0;
        assert!(c.validate().is_err());
        let mut c = TaggerConfig::new(10);
        c.class_weights[1][2] = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn weights_from_frequencies() {
        let w = class_weights_from_counts([1, 5, 18]);
        assert!((w[0] - 8.0).abs() < 1e-12);
        assert!((w[1] - 1.6).abs() < 1e-12);
        assert!((w[2] - 4.0 / 9.0).abs() < 1e-12);
        // 24 : 4.8 : 1.33 before the 1/3 factor
        assert!((3.0 * w[1] - 4.8).abs() < 1e-12);
        assert_eq!(class_weights_from_counts([0, 2, 2]), [1.0, 4.0 / 6.0, 4.0 / 6.0]);
    }

    #[test]
    fn loss_examples() {
        let gold = GoldTags {
            sign: vec![Tag::B, Tag::I, Tag::O],
            phrase: vec![Tag::B, Tag::I, Tag::I],
        };
        let third = 1.0 / 3.0;
        let uniform = FrameProbs {
            sign: vec![[third; 3]; 3],
            phrase: vec![[third; 3]; 3],
        };
        let unit = [[1.0; 3]; 2];
        let l = loss(&uniform, &gold, &unit).unwrap();
        assert!((l - 2.0 * 3f64.ln()).abs() < 1e-12);

        let onehot = |tags: &[Tag]| {
            tags.iter()
                .map(|t| {
                    let mut r = [0.0; 3];
                    r[t.index()] = 1.0;
                    r
                })
                .collect()
        };
        let perfect = FrameProbs {
            sign: onehot(&gold.sign),
            phrase: onehot(&gold.phrase),
        };
        assert_eq!(loss(&perfect, &gold, &unit).unwrap(), 0.0);

        let short = GoldTags {
            sign: vec![Tag::B],
            phrase: vec![Tag::B],
        };
        assert!(loss(&uniform, &short, &unit).is_err());
    }
}
