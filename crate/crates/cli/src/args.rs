use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "signseg", version, about = "Sign and phrase segmentation from pose sequences")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file (default: $SIGNSEG_CONFIG)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Pipeline frame rate
    #[arg(long, global = true)]
    pub fps: Option<f64>,
    /// Named selector (body75, face-contour-128, all) or a selector JSON file
    #[arg(long, global = true)]
    pub selector: Option<String>,
    /// Comma-separated feature blocks: flow, handnorm (or "none")
    #[arg(long, global = true)]
    pub features: Option<String>,
    #[arg(long, global = true)]
    pub threshold_b: Option<f64>,
    #[arg(long, global = true)]
    pub threshold_o: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeArg>,
    /// Reopen a segment at the B frame that closes the previous one
    #[arg(long, global = true)]
    pub strict_bio: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Files processed concurrently
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Threshold,
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TierArg {
    Sign,
    Phrase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HandArg {
    Left,
    Right,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Segment pose files with a trained model
    Segment(SegmentArgs),
    /// Train a tagger on paired pose and segment files
    Train(TrainArgs),
    /// Grid-search decoder thresholds per tier
    Tune(TuneArgs),
    /// Score predictions against gold segments
    Eval(EvalArgs),
    /// Round-trip gold segments through BIO and IO tags at several frame rates
    BioFidelity(FidelityArgs),
    /// Consistency of normalized hands within hand-shape groups
    HandBench(HandBenchArgs),
    /// Per-point optical flow as CSV
    FlowDump(FlowDumpArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SegmentArgs {
    /// Model checkpoint
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write `<stem>.probs.json`
    #[arg(long)]
    pub write_probs: bool,
    /// Pose files (poseseq-json)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct TrainSettingsArgs {
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Evaluations without improvement before stopping
    #[arg(long)]
    pub patience: Option<usize>,
    /// Stop once this frame-F1 is reached
    #[arg(long)]
    pub target_f1: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Directory of `<stem>.pose.json` + `<stem>.segments.json` pairs
    #[arg(long)]
    pub data: PathBuf,
    /// Validation directory (default: evaluate on the training set)
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: TrainSettingsArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TuneArgs {
    /// Directory of `<stem>.probs.json` (or `.pose.json` with --model) + `<stem>.segments.json`
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated threshold values (default 10,20,...,90)
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    /// Predicted `.segments.json` file or directory
    #[arg(long, requires = "gold", conflicts_with_all = ["model", "data"])]
    pub pred: Option<PathBuf>,
    /// Gold `.segments.json` file or directory
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long, requires = "data")]
    pub model: Option<PathBuf>,
    /// Directory of pose + segments pairs, used with --model
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FidelityArgs {
    /// Gold `.segments.json` file or directory
    #[arg(long, conflicts_with = "synthetic")]
    pub gold: Option<PathBuf>,
    /// Generate a synthetic corpus with this many segments
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Share of segments adjacent to their predecessor in the synthetic corpus
    #[arg(long, default_value_t = 0.1)]
    pub adjacency: f64,
    /// Frame rate of the synthetic corpus
    #[arg(long, default_value_t = 50.0)]
    pub source_fps: f64,
    /// Comma-separated frame rates to test
    #[arg(long, default_value = "5,10,15,20,25,30,40,50")]
    pub rates: String,
    #[arg(long, value_enum, default_value_t = TierArg::Sign)]
    pub tier: TierArg,
    /// CSV output (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HandBenchArgs {
    /// `{"groups":[{"label":..,"files":[..]}]}`; files are relative to the manifest
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = HandArg::Right)]
    pub hand: HandArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowDumpArgs {
    pub input: PathBuf,
    /// CSV output (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}
