use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{train_step, Adam, GoldTags, TaggerModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::metrics::frame_f1;
use crate::tags::Tier;

#[derive(Debug, Clone)]
pub struct TrainExample {
    pub features: FeatureMatrix,
    pub gold: GoldTags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_steps: usize,
    /// Evaluate after every `eval_every` steps (and at the end).
    pub eval_every: usize,
    /// Stop after this many evaluations without improvement.
    pub patience: Option<usize>,
    /// Stop once the evaluated frame-F1 reaches this value.
    pub target_f1: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_steps: 500,
            eval_every: 10,
            patience: None,
            target_f1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub epoch: usize,
    pub loss: f64,
    /// Set on evaluation steps.
    pub f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    /// Parameters at the best evaluation.
    pub model: TaggerModel,
    pub best_f1: f64,
    pub best_step: usize,
    pub steps: usize,
    pub log: Vec<LogRow>,
}

/// Mean frame-F1 of argmax tags over all sequences and both tiers.
pub fn evaluate_f1(model: &TaggerModel, data: &[TrainExample]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidValue("evaluation set is empty".into()));
    }
    let mut sum = 0.0;
    for ex in data {
        let probs = model.predict(&ex.features)?;
        for tier in Tier::ALL {
            sum += frame_f1(&probs.argmax_tags(tier), ex.gold.tier(tier))?;
        }
    }
    Ok(sum / (2 * data.len()) as f64)
}

/// One sequence per step, reshuffled every epoch by the config seed. Model
/// selection uses `val`, or `train` when `val` is empty.
pub fn fit(
    model: TaggerModel,
    train: &[TrainExample],
    val: &[TrainExample],
    options: &FitOptions,
) -> Result<FitReport> {
    if train.is_empty() {
        return Err(Error::InvalidValue("training set is empty".into()));
    }
    if options.eval_every == 0 {
        return Err(Error::InvalidValue("eval_every must be positive".into()));
    }
    let eval_set = if val.is_empty() { train } else { val };
    let mut rng = ChaCha8Rng::seed_from_u64(model.config().seed.wrapping_add(2));
    let mut opt = Adam::new(&model);
    let mut model = model;
    let mut best = (evaluate_f1(&model, eval_set)?, 0, model.clone());
    let mut log = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stale = 0;
    let mut step = 0;
    'outer: for epoch in 0.. {
        order.shuffle(&mut rng);
        for &i in &order {
            if step == options.max_steps {
                break 'outer;
            }
            let loss = train_step(&mut model, &mut opt, &train[i].features, &train[i].gold)?;
            step += 1;
            let mut row = LogRow { step, epoch, loss, f1: None };
            if step % options.eval_every == 0 || step == options.max_steps {
                let f1 = evaluate_f1(&model, eval_set)?;
                row.f1 = Some(f1);
                if f1 > best.0 {
                    best = (f1, step, model.clone());
                    stale = 0;
                } else {
                    stale += 1;
                }
                log.push(row);
                if options.target_f1.is_some_and(|t| f1 >= t)
                    || options.patience.is_some_and(|p| stale >= p)
                {
                    break 'outer;
                }
            } else {
                log.push(row);
            }
        }
    }
    Ok(FitReport {
        model: best.2,
        best_f1: best.0,
        best_step: best.1,
        steps: step,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::TaggerConfig;
    use crate::tags::{Segment, Tier};

    fn example(offset: usize) -> TrainExample {
        let sign = [Segment::new(2 + offset, 6 + offset, Tier::Sign), Segment::new(8 + offset, 12 + offset, Tier::Sign)];
        let phrase = [Segment::new(2 + offset, 12 + offset, Tier::Phrase)];
        let gold = GoldTags::from_segments(&sign, &phrase, 20).unwrap();
        let values = (0..20)
            .flat_map(|f| {
                let active = sign.iter().any(|s| (s.start..s.end).contains(&f));
                let onset = sign.iter().any(|s| s.start == f);
                [active as u8 as f64, onset as u8 as f64]
            })
            .collect();
        TrainExample {
            features: FeatureMatrix::new(20, 2, values).unwrap(),
            gold,
        }
    }

    #[test]
    fn fit_improves_and_stops_at_target() {
        let c = TaggerConfig {
            hidden_dim: 12,
            layers: 1,
            learning_rate: 1e-2,
            seed: 4,
            ..TaggerConfig::new(2)
        };
        let data = [example(0), example(3)];
        let m = TaggerModel::init(&c).unwrap();
        let start = evaluate_f1(&m, &data).unwrap();
        let opts = FitOptions {
            max_steps: 400,
            eval_every: 2,
            target_f1: Some(0.99),
            ..Default::default()
        };
        let r = fit(m, &data, &[], &opts).unwrap();
        assert!(r.best_f1 > start);
        assert!(r.best_f1 >= 0.99, "{}", r.best_f1);
        assert!(r.steps < 400);
        assert_eq!(evaluate_f1(&r.model, &data).unwrap(), r.best_f1);
        assert_eq!(r.log.len(), r.steps);
    }

    #[test]
    fn fit_is_deterministic() {
        let c = TaggerConfig {
            hidden_dim: 4,
            layers: 1,
            seed: 1,
            ..TaggerConfig::new(2)
        };
        let data = [example(0), example(1), example(2)];
        let opts = FitOptions {
            max_steps: 7,
            eval_every: 3,
            ..Default::default()
        };
        let a = fit(TaggerModel::init(&c).unwrap(), &data, &[], &opts).unwrap();
        let b = fit(TaggerModel::init(&c).unwrap(), &data, &[], &opts).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.steps, 7);
    }
}
