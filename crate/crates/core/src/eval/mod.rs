//! Evaluation machinery.
//!
//! Two independent suites live here:
//!
//! - rollout fidelity: per-frame L1 and SSIM between generated and recorded
//!   video, the chunked autoregressive rollout driver, and seed-then-episode
//!   aggregation into benchtop / tissue curves;
//! - trial outcomes: Clopper-Pearson intervals, two-sided Fisher exact tests
//!   with Holm-Bonferroni adjustment, sub-task averages and task survival.

mod aggregate;
mod binomial;
mod fisher;
mod metrics;
pub mod protocol;
mod rollout;
mod trials;

pub use aggregate::{aggregate_rollouts, Category, CategorySummary, MetricCurves, RolloutMetricSeries};
pub use binomial::{binomial_tail_ge, binomial_tail_le, clopper_pearson};
pub use fisher::{fisher_exact, holm_bonferroni};
pub use metrics::{frames_from_u8, l1_per_frame, ssim_per_frame, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};
pub use rollout::{
    rollout_episode_from_record, run_rollout, ChunkRequest, ConstantGenerator, FrameGenerator, ReplayGenerator,
    RolloutConfig, RolloutEpisode,
};
pub use trials::{
    analyze_trials, subtask_average, survival_curve, Comparison, PolicyCounts, PolicyTrials, RateRow, StageOutcome,
    SubtaskAverage, SurvivalCurve, TrialLog, TrialOutcomeTable, TrialReport,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("frames of {height}x{width} are smaller than the {window}x{window} SSIM window")]
    FrameTooSmall { height: usize, width: usize, window: usize },
    #[error("no rollout series for category {0:?}")]
    EmptyCategory(Category),
    #[error("dataset `{0}` has no category")]
    UnmappedDataset(String),
    #[error("no series to aggregate")]
    NoSeries,
    #[error("invalid counts: {successes} successes out of {trials} trials")]
    Counts { successes: u64, trials: u64 },
    #[error("confidence {0} must lie in (0, 1)")]
    Confidence(f64),
    #[error("p-value {0} outside [0, 1]")]
    Probability(f64),
    #[error("trial {trial}: {message}")]
    StageOrder { trial: usize, message: String },
    #[error("empty outcome table")]
    EmptyTable,
    #[error("episode `{episode}` too short: {message}")]
    EpisodeTooShort { episode: String, message: String },
    #[error("generator failed: {0}")]
    Generator(String),
    #[error("generator timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("generator protocol: {0}")]
    Protocol(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

impl EvalError {
    pub fn code(&self) -> &'static str {
        match self {
            EvalError::Shape(_) => "shape",
            EvalError::FrameTooSmall { .. } => "frame-too-small",
            EvalError::EmptyCategory(_) => "empty-category",
            EvalError::UnmappedDataset(_) => "unmapped-dataset",
            EvalError::NoSeries => "no-series",
            EvalError::Counts { .. } => "counts",
            EvalError::Confidence(_) => "confidence",
            EvalError::Probability(_) => "probability",
            EvalError::StageOrder { .. } => "stage-order",
            EvalError::EmptyTable => "empty-table",
            EvalError::EpisodeTooShort { .. } => "episode-too-short",
            EvalError::Generator(_) => "generator",
            EvalError::Timeout(_) => "timeout",
            EvalError::Protocol(_) => "protocol",
            EvalError::Io { .. } => "io",
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, EvalError::Io { .. })
    }

    pub(crate) fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        EvalError::Io { path: path.into(), source }
    }
}
