use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use signseg::tagger::{
    class_weights_from_corpus, fit, save_model, FitOptions, GoldTags, TaggerConfig, TaggerModel, TrainExample,
};
use signseg::tags::Tier;

use super::{manifest_in, num};
use crate::args::{Command, TrainArgs};
use crate::config::Settings;
use crate::data::{self, POSE_SUFFIX, SEGMENTS_SUFFIX};
use crate::error::{fail, CliResult, Stage, StageExt};

pub const CHECKPOINT: &str = "model.ckpt";
pub const LOG: &str = "train_log.csv";
pub const SUMMARY: &str = "train_summary.json";

#[derive(Debug, Serialize)]
struct Summary {
    best_f1: f64,
    best_step: usize,
    steps: usize,
    train_sequences: usize,
    val_sequences: usize,
    input_dim: usize,
    parameter_count: usize,
    class_weights: [[f64; 3]; 2],
}

/// Training examples from a directory of pose + segments pairs.
pub(crate) fn load_examples(dir: &Path, settings: &Settings) -> CliResult<Vec<TrainExample>> {
    let selector = settings.selector()?;
    let pairs = data::pair_files(dir, POSE_SUFFIX, dir, SEGMENTS_SUFFIX)?;
    data::par_map(settings.workers, &pairs, |pair| {
        let name = pair.first.display().to_string();
        let seq = data::load_pose(&pair.first)?;
        let segments = data::load_segments(&pair.second)?;
        let features = data::features(&seq, settings, &selector, &name)?
            .ok_or_else(|| fail(Stage::Load, format!("{name}: no frames")))?;
        let t = features.num_frames;
        let gold = GoldTags::from_segments(
            &data::gold_at(&segments, Tier::Sign, settings.fps, t),
            &data::gold_at(&segments, Tier::Phrase, settings.fps, t),
            t,
        )
        .stage_with(Stage::Load, || pair.second.display().to_string())?;
        Ok(TrainExample { features, gold })
    })
}

pub fn run(args: &TrainArgs, command: &Command, settings: &Settings) -> CliResult<()> {
    let train = load_examples(&args.data, settings)?;
    let val = match &args.val {
        Some(dir) => load_examples(dir, settings)?,
        None => Vec::new(),
    };
    let input_dim = train[0].features.width;
    if let Some(bad) = train.iter().chain(&val).find(|e| e.features.width != input_dim) {
        return Err(fail(
            Stage::Features,
            format!("feature widths differ: {input_dim} vs {}", bad.features.width),
        ));
    }
    let t = &settings.training;
    let config = TaggerConfig {
        hidden_dim: t.hidden_dim,
        layers: t.layers,
        learning_rate: t.learning_rate,
        class_weights: class_weights_from_corpus(train.iter().map(|e| &e.gold)),
        seed: settings.seed,
        dropout: t.dropout,
        grad_clip: t.grad_clip,
        ..TaggerConfig::new(input_dim)
    };
    let model = TaggerModel::init(&config).stage(Stage::Model)?;
    let options = FitOptions {
        max_steps: t.max_steps,
        eval_every: t.eval_every,
        patience: t.patience,
        target_f1: t.target_f1,
    };
    let report = fit(model, &train, &val, &options).stage(Stage::Train)?;

    std::fs::create_dir_all(&args.out).stage_with(Stage::Write, || args.out.display().to_string())?;
    save_model(&report.model, &args.out.join(CHECKPOINT)).stage(Stage::Write)?;
    let mut log = String::from("step,epoch,loss,f1\n");
    for row in &report.log {
        let f1 = row.f1.map(num).unwrap_or_default();
        let _ = writeln!(log, "{},{},{},{}", row.step, row.epoch, num(row.loss), f1);
    }
    data::write(&args.out.join(LOG), log)?;
    let summary = Summary {
        best_f1: report.best_f1,
        best_step: report.best_step,
        steps: report.steps,
        train_sequences: train.len(),
        val_sequences: val.len(),
        input_dim,
        parameter_count: config.parameter_count(),
        class_weights: config.class_weights,
    };
    data::write_json(&args.out.join(SUMMARY), &summary)?;
    manifest_in(&args.out, command, settings)?;
    println!(
        "best frame-F1 {:.4} at step {} of {} ({} parameters)",
        report.best_f1, report.best_step, report.steps, summary.parameter_count
    );
    Ok(())
}
