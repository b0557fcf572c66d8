//! Unified cross-embodiment data model.
//!
//! A [`RobotConfiguration`] identifies an embodiment and is the key under which
//! statistics and action layouts are tracked. A [`DatasetManifest`] is the
//! machine-checkable form of the per-dataset README template, and an
//! [`EpisodeRecord`] is one demonstration held in memory.

mod manifest;
mod registry;
mod split;
mod validate;

pub use manifest::{
    CollectionMethod, DatasetManifest, Environment, KinematicRepresentation, OperatorSkill, SplitFractions,
    DEFAULT_TEST_FRACTION, SCHEMA_VERSION,
};
pub use registry::ConfigRegistry;
pub use split::{select_test_ids, split_episodes};
pub use validate::{validate_manifest, ValidationReport, Violation};

use serde::{Deserialize, Serialize};

use crate::kinematics::{UnifiedActionChunk, ACTION_WIDTH};

/// Absolute state values stored per arm: position (3), unit quaternion
/// `(w, x, y, z)` (4) and normalized gripper opening (1).
pub const STATE_WIDTH_PER_ARM: usize = 8;

/// Tolerance on quaternion norms in stored episodes.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("unknown robot configuration `{0}`")]
    UnknownConfig(String),
    #[error("configuration `{0}` is already registered with a different payload")]
    DuplicateConfig(String),
    #[error("invalid configuration `{id}`: {violations}")]
    InvalidConfig { id: String, violations: String },
    #[error("invalid split fraction {0}; expected 0 <= fraction < 1")]
    InvalidFraction(f64),
    #[error("manifest parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl SchemaError {
    pub fn code(&self) -> &'static str {
        match self {
            SchemaError::UnknownConfig(_) => "unknown-config",
            SchemaError::DuplicateConfig(_) => "duplicate-config",
            SchemaError::InvalidConfig { .. } => "invalid-config",
            SchemaError::InvalidFraction(_) => "invalid-fraction",
            SchemaError::Parse(_) => "parse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSpace {
    AbsoluteEef,
    RelativeEef,
    Joint,
}

impl ControlSpace {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            ControlSpace::AbsoluteEef => 0,
            ControlSpace::RelativeEef => 1,
            ControlSpace::Joint => 2,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(ControlSpace::AbsoluteEef),
            1 => Some(ControlSpace::RelativeEef),
            2 => Some(ControlSpace::Joint),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraView {
    pub view_id: String,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
}

/// Opaque description of an auxiliary stream (eye gaze, ultrasound, depth...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamDescriptor {
    pub id: String,
    pub units: String,
    pub dims: u32,
}

/// Identity of one embodiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotConfiguration {
    pub config_id: String,
    pub platform_name: String,
    pub arm_count: u32,
    /// Unified slots per arm: 3 translation + rotation size + gripper count.
    pub per_arm_dof: Vec<u32>,
    pub native_rate_hz: f64,
    pub camera_views: Vec<CameraView>,
    pub control_space: ControlSpace,
    /// Native jaw range mapped onto `[0, 1]` at ingestion.
    pub gripper_native_range: [f64; 2],
    #[serde(default)]
    pub extra_streams: Vec<StreamDescriptor>,
}

impl RobotConfiguration {
    /// Width of one absolute-state row for this configuration.
    pub fn state_width(&self) -> usize {
        self.arm_count as usize * STATE_WIDTH_PER_ARM
    }

    /// Checks the configuration's own invariants, returning one violation per
    /// failed rule.
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let v = |path: &str, msg: String| Violation::new(path, msg);
        if self.config_id.trim().is_empty() {
            out.push(v("config_id", "must not be empty".into()));
        }
        if self.arm_count < 1 {
            out.push(v("arm_count", "must be at least 1".into()));
        }
        if self.per_arm_dof.len() != self.arm_count as usize {
            out.push(v("per_arm_dof", format!("has {} entries for {} arms", self.per_arm_dof.len(), self.arm_count)));
        }
        for (i, dof) in self.per_arm_dof.iter().enumerate() {
            if *dof < 1 {
                out.push(v(&format!("per_arm_dof[{i}]"), "must be at least 1".into()));
            }
        }
        let slots: u64 = self.per_arm_dof.iter().map(|d| *d as u64).sum();
        if slots > ACTION_WIDTH as u64 {
            out.push(v("per_arm_dof", format!("uses {slots} unified slots, more than {ACTION_WIDTH}")));
        }
        if !(self.native_rate_hz.is_finite() && self.native_rate_hz > 0.0) {
            out.push(v("native_rate_hz", format!("must be positive, got {}", self.native_rate_hz)));
        }
        for (i, cam) in self.camera_views.iter().enumerate() {
            if cam.width == 0 || cam.height == 0 {
                out.push(v(&format!("camera_views[{i}]"), "dimensions must be positive".into()));
            }
            if cam.channels != 1 && cam.channels != 3 {
                out.push(v(&format!("camera_views[{i}].channels"), format!("must be 1 or 3, got {}", cam.channels)));
            }
        }
        let [lo, hi] = self.gripper_native_range;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            out.push(v("gripper_native_range", format!("invalid range [{lo}, {hi}]")));
        }
        out
    }

    /// Maps a native jaw reading onto `[0, 1]`.
    pub fn normalize_gripper(&self, raw: f64) -> f64 {
        let [lo, hi] = self.gripper_native_range;
        ((raw - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// Where a camera's frames live.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameSource {
    /// `frame_count` raw 8-bit frames, each `height × width × channels`, row-major.
    Raw { frame_count: u32, data: Vec<u8> },
    /// Frames held in an external media file.
    External { uri: String, frame_count: u32 },
}

impl FrameSource {
    pub fn frame_count(&self) -> u32 {
        match self {
            FrameSource::Raw { frame_count, .. } | FrameSource::External { frame_count, .. } => *frame_count,
        }
    }
}

/// One camera's synchronized frame references.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraStream {
    pub view_id: String,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    /// One frame index per kinematic sample.
    pub frame_refs: Vec<u32>,
    pub source: FrameSource,
}

impl CameraStream {
    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * self.channels as usize
    }

    /// Raw bytes of frame `index`, if stored inline.
    pub fn frame(&self, index: u32) -> Option<&[u8]> {
        match &self.source {
            FrameSource::Raw { frame_count, data } if index < *frame_count => {
                let len = self.frame_len();
                let start = index as usize * len;
                data.get(start..start + len)
            }
            _ => None,
        }
    }
}

/// One demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode_id: String,
    pub dataset_id: String,
    pub config_id: String,
    pub task_prompt: String,
    pub split: Split,
    pub control_space: ControlSpace,
    /// Columns per kinematic row.
    pub state_width: usize,
    /// `T × state_width` absolute state, row-major.
    pub kinematics: Vec<f32>,
    /// Seconds, one per sample.
    pub timestamps: Vec<f64>,
    pub cameras: Vec<CameraStream>,
    /// Optional per-sample validity flags (e.g. clutch-invalidated segments).
    pub validity: Option<Vec<bool>>,
    /// Unified hybrid-relative actions, one row per step, once converted.
    pub actions: Option<UnifiedActionChunk>,
}

impl EpisodeRecord {
    pub fn sample_count(&self) -> usize {
        self.timestamps.len()
    }

    pub fn state_row(&self, t: usize) -> &[f32] {
        &self.kinematics[t * self.state_width..(t + 1) * self.state_width]
    }

    pub fn arm_count(&self) -> usize {
        self.state_width / STATE_WIDTH_PER_ARM
    }

    /// Absolute `(position, quaternion, gripper)` of `arm` at sample `t`.
    pub fn arm_state(&self, t: usize, arm: usize) -> ([f64; 3], [f64; 4], f64) {
        let row = self.state_row(t);
        let o = arm * STATE_WIDTH_PER_ARM;
        let f = |i: usize| row[o + i] as f64;
        ([f(0), f(1), f(2)], [f(3), f(4), f(5), f(6)], f(7))
    }
}

/// One row of a mixture table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEntry {
    pub dataset_id: String,
    pub ratio: f64,
}
