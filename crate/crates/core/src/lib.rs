//! Sign and phrase segmentation from pose sequences.
//!
//! The pipeline resamples a pose sequence, normalizes it by shoulder width,
//! selects keypoints, builds per-frame features (coordinates, optical flow
//! and optionally normalized hands), runs a bidirectional LSTM tagger with
//! one BIO head per tier and decodes the frame probabilities into segments.

pub mod decode;
pub mod error;
pub mod features;
pub mod formats;
pub mod geometry;
pub mod hand;
mod linalg;
pub mod metrics;
pub mod pose;
pub mod report;
pub mod synthetic;
pub mod tagger;
pub mod tags;
pub mod tune;

pub use error::{Error, Result};

/// Rounds half away from zero, the rounding rule used for all frame arithmetic.
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}
