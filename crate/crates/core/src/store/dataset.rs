//! Dataset directories: `<dataset_id>/manifest.json`, `episode_%06d.ohe`
//! and an optional `stats.json`.

use std::fs;
use std::path::{Path, PathBuf};

use super::{read_episode, write_episode, StoreError};
use crate::schema::{
    CameraView, ConfigRegistry, ControlSpace, DatasetManifest, EpisodeRecord, RobotConfiguration, StreamDescriptor,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATS_FILE: &str = "stats.json";
/// Registry of robot configurations shared by the datasets under one root.
pub const REGISTRY_FILE: &str = "robots.json";

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    pub episodes: Vec<EpisodeRecord>,
}

pub fn episode_file_name(index: usize) -> String {
    format!("episode_{index:06}.ohe")
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, StoreError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
    DatasetManifest::from_json(&text).map_err(|source| StoreError::Schema { path, source })
}

pub fn write_manifest(dir: &Path, manifest: &DatasetManifest) -> Result<(), StoreError> {
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()).map_err(|e| StoreError::io(&path, e))
}

pub fn read_registry(path: &Path) -> Result<ConfigRegistry, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    ConfigRegistry::from_json(&text).map_err(|source| StoreError::Schema { path: path.to_path_buf(), source })
}

pub fn write_registry(path: &Path, registry: &ConfigRegistry) -> Result<(), StoreError> {
    fs::write(path, registry.to_json()).map_err(|e| StoreError::io(path, e))
}

/// Episode files in `dir`, sorted by name.
pub fn list_episode_files(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| StoreError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "ohe")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("episode_"))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, StoreError> {
    let manifest = read_manifest(dir)?;
    let episodes = list_episode_files(dir)?.iter().map(|p| read_episode(p)).collect::<Result<_, _>>()?;
    Ok(Dataset { dir: dir.to_path_buf(), manifest, episodes })
}

/// Writes the manifest and one container per episode, numbered in order.
/// Episode files already in `dir` are removed first.
pub fn save_dataset(dir: &Path, manifest: &DatasetManifest, episodes: &[EpisodeRecord]) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    for stale in list_episode_files(dir)? {
        fs::remove_file(&stale).map_err(|e| StoreError::io(&stale, e))?;
    }
    write_manifest(dir, manifest)?;
    for (i, ep) in episodes.iter().enumerate() {
        write_episode(ep, &dir.join(episode_file_name(i)))?;
    }
    Ok(())
}

fn preset(
    id: &str,
    platform: &str,
    arms: u32,
    rate: f64,
    views: &[(&str, u32, u32, u8)],
    gripper: [f64; 2],
    extra: &[(&str, &str, u32)],
) -> RobotConfiguration {
    RobotConfiguration {
        config_id: id.into(),
        platform_name: platform.into(),
        arm_count: arms,
        per_arm_dof: vec![10; arms as usize],
        native_rate_hz: rate,
        camera_views: views
            .iter()
            .map(|(v, w, h, c)| CameraView { view_id: v.to_string(), width: *w, height: *h, channels: *c })
            .collect(),
        control_space: ControlSpace::AbsoluteEef,
        gripper_native_range: gripper,
        extra_streams: extra
            .iter()
            .map(|(id, units, dims)| StreamDescriptor { id: id.to_string(), units: units.to_string(), dims: *dims })
            .collect(),
    }
}

/// Built-in embodiment presets used by the synthetic pipeline.
pub fn preset_configs() -> Vec<RobotConfiguration> {
    vec![
        preset(
            "dvrk_si",
            "da Vinci Research Kit (Si)",
            2,
            30.0,
            &[("endoscope_left", 40, 32, 3), ("endoscope_right", 40, 32, 3)],
            [0.0, 1.0],
            &[],
        ),
        preset("versius", "CMR Versius", 2, 25.0, &[("endoscope", 40, 32, 3)], [0.0, 60.0], &[]),
        preset(
            "kuka_us",
            "KUKA LBR with ultrasound probe",
            1,
            20.0,
            &[("ultrasound", 32, 32, 1)],
            [0.0, 1.0],
            &[("us_pose", "m", 7)],
        ),
        preset("quad_arm", "four-arm research platform", 4, 35.0, &[("overview", 48, 36, 3)], [0.0, 1.0], &[]),
    ]
}
