//! Episode container format, dataset directories and synthetic episodes.

pub mod checksum;
mod container;
mod convert;
mod dataset;
mod synth;

pub use container::{decode_episode, encode_episode, read_episode, write_episode, CONTAINER_VERSION, MAGIC};
pub use convert::convert_control_space;
pub use dataset::{
    episode_file_name, list_episode_files, load_dataset, preset_configs, read_manifest, read_registry, save_dataset,
    write_manifest, write_registry, Dataset, MANIFEST_FILE, REGISTRY_FILE, STATS_FILE,
};
pub use synth::{
    arm_center, synthesize_episode, synthetic_manifest, SynthEpisode, SynthScenario, TrajectoryFamily, CIRCLE_RADIUS,
};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("not an episode container (magic {found:?})")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported container version {0}")]
    UnknownVersion(u16),
    #[error("truncated container: {actual} bytes, need {expected}")]
    Truncated { expected: u64, actual: u64 },
    #[error("checksum mismatch over bytes {start}..{end}: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { start: u64, end: u64, stored: u64, computed: u64 },
    #[error("inconsistent container at byte {offset}: {message}")]
    Inconsistent { offset: u64, message: String },
    #[error("cannot encode episode: {0}")]
    Encode(String),
    #[error("unsupported conversion: {0}")]
    Unsupported(String),
    #[error("episode does not match configuration: {0}")]
    Mismatch(String),
    #[error("invalid synthetic scenario: {0}")]
    Scenario(String),
    #[error("conversion failed: {0}")]
    Convert(#[from] crate::kinematics::KinematicsError),
    #[error("{path}: {source}")]
    Schema { path: PathBuf, source: crate::schema::SchemaError },
    #[error("{path}: {message}")]
    Document { path: PathBuf, message: String },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::BadMagic { .. } => "bad-magic",
            StoreError::UnknownVersion(_) => "unknown-version",
            StoreError::Truncated { .. } => "truncated",
            StoreError::Checksum { .. } => "checksum",
            StoreError::Inconsistent { .. } => "inconsistent",
            StoreError::Encode(_) => "encode",
            StoreError::Unsupported(_) => "unsupported",
            StoreError::Mismatch(_) => "mismatch",
            StoreError::Scenario(_) => "scenario",
            StoreError::Convert(_) => "convert",
            StoreError::Schema { .. } => "schema",
            StoreError::Document { .. } => "document",
            StoreError::Io { .. } => "io",
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, StoreError::Io { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StoreError::Io { path: path.into(), source }
    }
}
