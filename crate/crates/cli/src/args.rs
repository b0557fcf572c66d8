use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Cross-embodiment surgical robot data pipeline and evaluation harness.
///
/// Exit codes: 0 success, 1 domain failure (invalid data, failed checks),
/// 2 environment failure (missing files, I/O, generator process).
/// Verbosity is controlled by the OHE_LOG environment variable
/// (error, warn, info, debug, trace).
#[derive(Debug, Parser)]
#[command(name = "openh", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every random stage [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-episode work (0 = one per core) [default: 0]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// TOML file with default settings; command-line flags take precedence
    #[arg(long = "config", global = true, value_name = "FILE")]
    pub config_file: Option<PathBuf>,
    /// Override a config-file setting, e.g. --set confidence=0.9
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check dataset directories against the schema
    Validate(ValidateArgs),
    /// Generate a synthetic dataset
    Synth(SynthArgs),
    /// Resample and convert a dataset to relative end-effector actions
    Convert(ConvertArgs),
    /// Compute per-step, per-dimension action statistics
    Stats(StatsArgs),
    /// Merge statistics documents by weighted moment matching
    MergeStats(MergeStatsArgs),
    /// Normalize a dataset's action chunks and summarize the result
    Normalize(NormalizeArgs),
    /// Solve a capped mixture and write its ratio table
    Mix(MixArgs),
    /// Evaluation suites
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Serve recorded frames over the generator protocol (used for testing)
    #[command(hide = true)]
    ServeReplay(ServeReplayArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset directories (each holding manifest.json and episode_*.ohe)
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    /// Robot configuration registry [default: robots.json beside the dataset, else built-in presets]
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Circle,
    Lissajous,
    PickPlace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnvironmentArg {
    Simulation,
    BenchtopPhantom,
    ExVivo,
    InVivo,
    Clinical,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Root directory; the dataset is written to <out>/<dataset>
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset id
    #[arg(long)]
    pub dataset: String,
    /// Robot configuration preset (dvrk_si, versius, kuka_us, quad_arm)
    #[arg(long = "robot", default_value = "dvrk_si")]
    pub robot: String,
    #[arg(long, value_enum, default_value = "circle")]
    pub family: Family,
    #[arg(long, default_value_t = 20)]
    pub episodes: usize,
    /// Samples per episode at the native rate
    #[arg(long, default_value_t = 240)]
    pub samples: usize,
    /// Position noise standard deviation in metres
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "benchtop-phantom")]
    pub environment: EnvironmentArg,
    /// Held-out test fraction
    #[arg(long, default_value_t = 0.05)]
    pub test_fraction: f64,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Source dataset directory
    pub dataset: PathBuf,
    /// Output dataset directory
    #[arg(long)]
    pub out: PathBuf,
    /// Target frame rate in Hz [default: 10]
    #[arg(long)]
    pub target_rate: Option<f64>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Converted dataset directory
    pub dataset: PathBuf,
    /// Output document [default: <dataset>/stats.json]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Chunk horizon (temporal steps per chunk) [default: 16]
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct MergeStatsArgs {
    /// Statistics documents sharing one robot configuration
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Mixture table supplying the weights
    #[arg(long, conflicts_with = "weights")]
    pub mixture: Option<PathBuf>,
    /// Explicit weight per dataset, e.g. --weight ds_a=0.3 (repeatable)
    #[arg(long = "weight", value_name = "DATASET=WEIGHT")]
    pub weights: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizerArg {
    Zscore,
    Quantile,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Converted dataset directory
    pub dataset: PathBuf,
    /// Statistics document [default: <dataset>/stats.json]
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "zscore")]
    pub kind: NormalizerArg,
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitArg,
    /// Summary JSON output [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Dataset directories; size is the manifest's total hours
    pub datasets: Vec<PathBuf>,
    /// Explicit size per dataset, e.g. --size versius=489 (repeatable)
    #[arg(long = "size", value_name = "DATASET=SIZE")]
    pub sizes: Vec<String>,
    /// Maximum ratio per dataset, e.g. --cap versius=0.2 (repeatable)
    #[arg(long = "cap", value_name = "DATASET=RATIO")]
    pub caps: Vec<String>,
    /// Ratio table output [default: standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw this many sampling steps
    #[arg(long)]
    pub steps: Option<usize>,
    /// Where to write the sampled dataset ids, one per line
    #[arg(long, requires = "steps")]
    pub stream_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Autoregressive rollout fidelity (L1 / SSIM per frame)
    ///
    /// Outputs in --out:
    ///   rollout_frames.csv   dataset_id,episode_id,seed,frame_index,chunk_index,boundary,l1,ssim
    ///   rollout_summary.csv  category,metric,frame_index,mean,std
    ///   rollout_failures.csv dataset_id,episode_id,seed,error
    #[command(verbatim_doc_comment)]
    Rollout(RolloutArgs),
    /// Trial-outcome statistics from a JSON log
    ///
    /// Outputs in --out:
    ///   rates.csv        policy,subtask,successes,trials,rate,ci_lo,ci_hi
    ///   comparisons.csv  subtask,policy_a,policy_b,p_value,p_holm
    ///   averages.csv     policy,subtasks,excluded,mean_rate,pooled_successes,pooled_trials,pooled_rate,pooled_ci_lo,pooled_ci_hi
    ///   survival.csv     policy,stage_index,stage,surviving,trials
    #[command(verbatim_doc_comment)]
    Trials(TrialsArgs),
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// Dataset directories to evaluate (test-split episodes are used)
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    /// identity | constant:<level> | cmd:<program> [args...] | stage:<dir>
    #[arg(long, default_value = "identity")]
    pub generator: String,
    /// Category per dataset, e.g. --category ds=tissue (repeatable); default from manifest environment
    #[arg(long = "category", value_name = "DATASET=benchtop|tissue")]
    pub categories: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Autoregressive chunks per episode [default: 6]
    #[arg(long)]
    pub chunks: Option<usize>,
    /// Frames per chunk [default: 12]
    #[arg(long)]
    pub chunk_size: Option<usize>,
    /// Target frame rate in Hz [default: 10]
    #[arg(long)]
    pub target_rate: Option<f64>,
    /// Seeds per episode, starting at --seed [default: 3]
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Test episodes per dataset [default: 2]
    #[arg(long)]
    pub episodes_per_dataset: Option<usize>,
    /// Camera index used for frames [default: 0]
    #[arg(long, default_value_t = 0)]
    pub camera: usize,
    /// Seconds to wait for an external generator per chunk [default: 60]
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrialsArgs {
    /// Trial log (JSON with subtasks, outcomes, stages, trials)
    pub log: PathBuf,
    /// Confidence level of the Clopper-Pearson intervals [default: 0.95]
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Output directory [default: tables on standard output]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeReplayArgs {
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    #[arg(long)]
    pub target_rate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub camera: usize,
    /// Serve a staged directory instead of standard input (stops when <dir>/STOP exists)
    #[arg(long)]
    pub stage: Option<PathBuf>,
    #[arg(long)]
    pub registry: Option<PathBuf>,
}
