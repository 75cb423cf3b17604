//! Config file loading and resolution against flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use signseg::decode::{DecodeMode, DecodeParams};
use signseg::features::FeatureOptions;
use signseg::pose::PointSelector;
use signseg::tags::Tier;

use crate::args::{CommonArgs, ModeArg, TrainSettingsArgs};
use crate::error::{fail, CliResult, Stage, StageExt};

pub const CONFIG_ENV: &str = "SIGNSEG_CONFIG";
pub const RUN_MANIFEST: &str = "run.json";

#[derive(Debug, Clone, Default, Deserialize)]
pub struct TierThresholds {
    pub threshold_b: Option<f64>,
    pub threshold_o: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct TierTable {
    pub sign: Option<TierThresholds>,
    pub phrase: Option<TierThresholds>,
}

/// Keys accepted in a config file. A `tune.json` is itself a valid config.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub fps: Option<f64>,
    pub selector: Option<String>,
    pub features: Option<String>,
    pub threshold_b: Option<f64>,
    pub threshold_o: Option<f64>,
    pub mode: Option<DecodeMode>,
    pub strict_bio: Option<bool>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub tiers: Option<TierTable>,
    pub hidden_dim: Option<usize>,
    pub layers: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_steps: Option<usize>,
    pub eval_every: Option<usize>,
    pub patience: Option<usize>,
    pub target_f1: Option<f64>,
    pub dropout: Option<f64>,
    pub grad_clip: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).stage_with(Stage::Config, || path.display().to_string())?;
        serde_json::from_str(&text).stage_with(Stage::Config, || path.display().to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSettings {
    pub hidden_dim: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub max_steps: usize,
    pub eval_every: usize,
    pub patience: Option<usize>,
    pub target_f1: Option<f64>,
    pub dropout: f64,
    pub grad_clip: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TierDecode {
    pub sign: DecodeParams,
    pub phrase: DecodeParams,
}

impl TierDecode {
    pub fn get(&self, tier: Tier) -> &DecodeParams {
        match tier {
            Tier::Sign => &self.sign,
            Tier::Phrase => &self.phrase,
        }
    }
}

/// Fully resolved settings; serialized as the run manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub config_file: Option<PathBuf>,
    pub fps: f64,
    pub selector: String,
    pub features: FeatureOptions,
    pub decode: TierDecode,
    pub seed: u64,
    pub workers: usize,
    pub training: TrainSettings,
}

impl Settings {
    pub fn selector(&self) -> CliResult<PointSelector> {
        let path = Path::new(&self.selector);
        if path.is_file() {
            let text = std::fs::read_to_string(path).stage_with(Stage::Select, || self.selector.clone())?;
            PointSelector::from_config(&text).stage_with(Stage::Select, || self.selector.clone())
        } else {
            PointSelector::by_name(&self.selector).stage(Stage::Select)
        }
    }
}

pub fn parse_features(text: &str) -> CliResult<FeatureOptions> {
    let mut options = FeatureOptions::default();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token {
            "flow" => options.include_flow = true,
            "handnorm" => options.include_hand_norm = true,
            "none" => {}
            other => {
                return Err(fail(
                    Stage::Config,
                    format!("unknown feature {other:?} (expected flow, handnorm or none)"),
                ))
            }
        }
    }
    Ok(options)
}

pub fn parse_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().stage_with(Stage::Config, || format!("{t:?} is not a number")))
        .collect()
}

/// Defaults, overridden by the config file, overridden by flags.
pub fn resolve(common: &CommonArgs, train: Option<&TrainSettingsArgs>) -> CliResult<Settings> {
    let config_path = common
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    let file = match &config_path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };

    let fps = common.fps.or(file.fps).unwrap_or(25.0);
    if !(fps.is_finite() && fps > 0.0) {
        return Err(fail(Stage::Config, format!("fps must be positive, got {fps}")));
    }
    let features = parse_features(common.features.as_deref().or(file.features.as_deref()).unwrap_or("flow"))?;

    let mode = match common.mode {
        Some(ModeArg::Threshold) => DecodeMode::Threshold,
        Some(ModeArg::Argmax) => DecodeMode::Argmax,
        None => file.mode.unwrap_or_default(),
    };
    let strict_bio = common.strict_bio || file.strict_bio.unwrap_or(false);
    let tier_params = |per_tier: Option<&TierThresholds>| -> CliResult<DecodeParams> {
        let pick = |flag: Option<f64>, tier: Option<f64>, top: Option<f64>| flag.or(tier).or(top).unwrap_or(50.0);
        let p = DecodeParams {
            threshold_b: pick(common.threshold_b, per_tier.and_then(|t| t.threshold_b), file.threshold_b),
            threshold_o: pick(common.threshold_o, per_tier.and_then(|t| t.threshold_o), file.threshold_o),
            mode,
            strict_bio,
        };
        p.validate().stage(Stage::Config)?;
        Ok(p)
    };
    let tiers = file.tiers.clone().unwrap_or_default();
    let decode = TierDecode {
        sign: tier_params(tiers.sign.as_ref())?,
        phrase: tier_params(tiers.phrase.as_ref())?,
    };

    let workers = common
        .workers
        .or(file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(fail(Stage::Config, "workers must be positive"));
    }

    let t = train.cloned().unwrap_or_default();
    let training = TrainSettings {
        hidden_dim: t.hidden_dim.or(file.hidden_dim).unwrap_or(256),
        layers: t.layers.or(file.layers).unwrap_or(4),
        learning_rate: t.learning_rate.or(file.learning_rate).unwrap_or(1e-3),
        max_steps: t.max_steps.or(file.max_steps).unwrap_or(500),
        eval_every: t.eval_every.or(file.eval_every).unwrap_or(10),
        patience: t.patience.or(file.patience),
        target_f1: t.target_f1.or(file.target_f1),
        dropout: t.dropout.or(file.dropout).unwrap_or(0.0),
        grad_clip: t.grad_clip.or(file.grad_clip),
    };

    Ok(Settings {
        config_file: config_path,
        fps,
        selector: common.selector.clone().or(file.selector).unwrap_or_else(|| "body75".into()),
        features,
        decode,
        seed: common.seed.or(file.seed).unwrap_or(0),
        workers,
        training,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_lists() {
        let f = parse_features("flow,handnorm").unwrap();
        assert!(f.include_flow && f.include_hand_norm);
        let f = parse_features("none").unwrap();
        assert!(!f.include_flow && !f.include_hand_norm);
        assert!(parse_features("flow,depth").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"fps": 50, "threshold_b": 70, "tiers": {"phrase": {"threshold_b": 90, "threshold_o": 80, "iou": 0.5}}, "max_steps": 7}"#,
        )
        .unwrap();
        let common = CommonArgs {
            config: Some(path.clone()),
            threshold_o: Some(30.0),
            ..Default::default()
        };
        let s = resolve(&common, None).unwrap();
        assert_eq!(s.fps, 50.0);
        assert_eq!(s.decode.sign.threshold_b, 70.0);
        assert_eq!(s.decode.phrase.threshold_b, 90.0);
        assert_eq!(s.decode.phrase.threshold_o, 30.0);
        assert_eq!(s.training.max_steps, 7);
        assert_eq!(s.selector, "body75");
        assert!(s.features.include_flow);

        let common = CommonArgs {
            config: Some(path),
            fps: Some(25.0),
            threshold_b: Some(40.0),
            ..Default::default()
        };
        let s = resolve(&common, None).unwrap();
        assert_eq!(s.fps, 25.0);
        assert_eq!(s.decode.phrase.threshold_b, 40.0);
    }

    #[test]
    fn bad_config_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"fsp": 50}"#).unwrap();
        let common = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        assert_eq!(resolve(&common, None).unwrap_err().stage, Stage::Config);
        let common = CommonArgs {
            threshold_b: Some(120.0),
            ..Default::default()
        };
        assert!(resolve(&common, None).is_err());
    }
}
