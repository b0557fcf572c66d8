//! Cross-embodiment surgical robot demonstration pipeline.
//!
//! The crate converts heterogeneous robot episodes into a unified, normalized
//! action representation and provides the evaluation machinery used to score
//! action-conditioned video rollouts and physical trial outcomes.
//!
//! Modules:
//!
//! - [`schema`]: robot configurations, dataset manifests, episode records, splits.
//! - [`kinematics`]: rotation representations, hybrid-relative actions, the
//!   44-slot unified action layout and rate resampling.
//! - [`normstats`]: per-step, per-dimension action statistics, weighted
//!   moment-matching merges and the z-score / quantile normalizers.
//! - [`mixture`]: capped mixture ratio solving and deterministic sampling.
//! - [`eval`]: rollout fidelity metrics and trial-outcome statistics.
//! - [`store`]: the `OHE1` episode container, dataset directories, the
//!   synthetic episode generator and control-space conversion.

// Range checks are written as `!(x > lo)` so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eval;
pub mod kinematics;
pub mod mixture;
pub mod normstats;
pub mod rng;
pub mod schema;
pub mod store;

mod error;

pub use error::Error;
pub use kinematics::{HybridRelativeAction, Pose, SixDRotation, UnifiedActionChunk, ACTION_WIDTH};
pub use normstats::{ChunkStatistics, Normalizer, NormalizerKind};
pub use schema::{ControlSpace, DatasetManifest, EpisodeRecord, MixtureEntry, RobotConfiguration, Split};
