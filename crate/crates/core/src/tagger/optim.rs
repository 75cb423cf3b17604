use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GoldTags, TaggerModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Adaptive-moment optimizer state; also owns the dropout generator.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl Adam {
    pub fn new(model: &TaggerModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.data.len()]).collect();
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
            rng: ChaCha8Rng::seed_from_u64(model.config().seed.wrapping_add(1)),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// One full-sequence gradient step. Updated parameters are rounded to f32.
pub fn train_step(
    model: &mut TaggerModel,
    opt: &mut Adam,
    features: &FeatureMatrix,
    gold: &GoldTags,
) -> Result<f64> {
    let (_, cache) = model.forward_impl(features, Some(&mut opt.rng))?;
    let weights = model.config().class_weights;
    let (loss, mut grads) = model.backward(&cache, gold, &weights)?;
    let norm = grads.norm();
    if !loss.is_finite() || !norm.is_finite() {
        return Err(Error::NonFinite(format!(
            "step {}: loss = {loss}, gradient norm = {norm}",
            opt.step + 1
        )));
    }
    if let Some(clip) = model.config().grad_clip {
        if norm > clip {
            let s = clip / norm;
            grads.groups.iter_mut().flatten().for_each(|g| *g *= s);
        }
    }
    opt.step += 1;
    let lr = model.config().learning_rate;
    let bc1 = 1.0 - opt.beta1.powi(opt.step as i32);
    let bc2 = 1.0 - opt.beta2.powi(opt.step as i32);
    let (b1, b2, eps) = (opt.beta1, opt.beta2, opt.epsilon);
    for (((p, g), m), v) in model
        .params_mut()
        .iter_mut()
        .zip(&grads.groups)
        .zip(&mut opt.m)
        .zip(&mut opt.v)
    {
        for i in 0..p.data.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let update = lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            p.data[i] = (p.data[i] - update) as f32 as f64;
        }
    }
    Ok(loss)
}
