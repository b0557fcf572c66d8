use std::collections::BTreeSet;
use std::fmt;

use super::{
    ConfigRegistry, DatasetManifest, EpisodeRecord, RobotConfiguration, SchemaError, QUATERNION_NORM_TOLERANCE,
    SCHEMA_VERSION, STATE_WIDTH_PER_ARM,
};
use crate::kinematics::ACTION_WIDTH;

/// One failed invariant, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks a manifest and its episodes against the schema invariants.
///
/// An unknown `robot_config_id` is a hard error; everything else is reported
/// as a [`Violation`]. Episodes are checked in id order so the report is stable.
pub fn validate_manifest(
    manifest: &DatasetManifest,
    episodes: &[EpisodeRecord],
    registry: &ConfigRegistry,
) -> Result<ValidationReport, SchemaError> {
    let config = registry.lookup(&manifest.robot_config_id)?;
    let mut out = Vec::new();

    if manifest.openh_schema != SCHEMA_VERSION {
        out.push(Violation::new(
            "openh_schema",
            format!("unsupported version `{}`, expected `{SCHEMA_VERSION}`", manifest.openh_schema),
        ));
    }
    if manifest.dataset_id.trim().is_empty() {
        out.push(Violation::new("dataset_id", "must not be empty"));
    }
    for v in config.check() {
        out.push(Violation::new(format!("robot_config.{}", v.path), v.message));
    }
    let missing = |present: bool, field: &str, out: &mut Vec<Violation>| {
        if !present {
            out.push(Violation::new(field, "template field missing"));
        }
    };
    missing(manifest.collection_method.is_some(), "collection_method", &mut out);
    missing(manifest.operator_skill.is_some(), "operator_skill", &mut out);
    missing(manifest.environment.is_some(), "environment", &mut out);
    missing(manifest.kinematic_representation.is_some(), "kinematic_representation", &mut out);
    if manifest.sync_strategy.trim().is_empty() {
        out.push(Violation::new("sync_strategy", "must not be empty"));
    }
    if manifest.diversity_notes.trim().is_empty() {
        out.push(Violation::new("diversity_notes", "must not be empty"));
    }
    if manifest.episode_count != episodes.len() as u64 {
        out.push(Violation::new(
            "episode_count",
            format!("declares {} episodes, found {}", manifest.episode_count, episodes.len()),
        ));
    }
    if !(manifest.total_seconds.is_finite() && manifest.total_seconds >= 0.0) {
        out.push(Violation::new("total_seconds", "must be a nonnegative number"));
    }
    let sf = manifest.split_fractions;
    if !(0.0..=1.0).contains(&sf.train) || !(0.0..=1.0).contains(&sf.test) {
        out.push(Violation::new("split_fractions", "fractions must lie in [0, 1]"));
    } else if (sf.train + sf.test - 1.0).abs() > 1e-9 {
        out.push(Violation::new("split_fractions", format!("train + test = {}, expected 1", sf.train + sf.test)));
    }

    let mut order: Vec<&EpisodeRecord> = episodes.iter().collect();
    order.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    let mut seen = BTreeSet::new();
    for ep in order {
        if !seen.insert(ep.episode_id.as_str()) {
            out.push(Violation::new(format!("episodes[{}]", ep.episode_id), "duplicate episode id"));
        }
        check_episode(manifest, &config, ep, &mut out);
    }
    Ok(ValidationReport { violations: out })
}

fn check_episode(
    manifest: &DatasetManifest,
    config: &RobotConfiguration,
    ep: &EpisodeRecord,
    out: &mut Vec<Violation>,
) {
    let base = format!("episodes[{}]", ep.episode_id);
    let at = |field: &str| format!("{base}.{field}");
    if ep.dataset_id != manifest.dataset_id {
        out.push(Violation::new(
            at("dataset_id"),
            format!("`{}` does not match manifest `{}`", ep.dataset_id, manifest.dataset_id),
        ));
    }
    if ep.config_id != manifest.robot_config_id {
        out.push(Violation::new(
            at("config_id"),
            format!("`{}` does not match manifest `{}`", ep.config_id, manifest.robot_config_id),
        ));
    }
    let t_count = ep.sample_count();
    if ep.state_width != config.state_width() {
        out.push(Violation::new(
            at("state_width"),
            format!("{} does not match configuration width {}", ep.state_width, config.state_width()),
        ));
        return;
    }
    if ep.kinematics.len() != t_count * ep.state_width {
        out.push(Violation::new(
            at("kinematics"),
            format!("holds {} values, expected {} × {}", ep.kinematics.len(), t_count, ep.state_width),
        ));
        return;
    }
    for t in 0..t_count {
        let row = ep.state_row(t);
        if row.iter().any(|v| !v.is_finite()) {
            out.push(Violation::new(at(&format!("kinematics[{t}]")), "non-finite value"));
            continue;
        }
        for arm in 0..ep.arm_count() {
            let (_, q, g) = ep.arm_state(t, arm);
            let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
                out.push(Violation::new(
                    at(&format!("kinematics[{t}].arm{arm}.quaternion")),
                    format!("norm {norm:.9} differs from 1 by more than {QUATERNION_NORM_TOLERANCE:e}"),
                ));
            }
            if !(0.0..=1.0).contains(&g) {
                out.push(Violation::new(
                    at(&format!("kinematics[{t}].arm{arm}.gripper")),
                    format!("{g} outside [0, 1]"),
                ));
            }
        }
    }
    for (t, w) in ep.timestamps.windows(2).enumerate() {
        if !(w[1] >= w[0]) {
            out.push(Violation::new(at(&format!("timestamps[{}]", t + 1)), format!("{} precedes {}", w[1], w[0])));
        }
    }
    if ep.timestamps.iter().any(|t| !t.is_finite()) {
        out.push(Violation::new(at("timestamps"), "non-finite timestamp"));
    }
    if ep.cameras.len() != config.camera_views.len() {
        out.push(Violation::new(
            at("cameras"),
            format!("{} streams, configuration declares {}", ep.cameras.len(), config.camera_views.len()),
        ));
    }
    for cam in &ep.cameras {
        let cam_at = |field: &str| at(&format!("cameras[{}].{field}", cam.view_id));
        match config.camera_views.iter().find(|v| v.view_id == cam.view_id) {
            None => out.push(Violation::new(cam_at("view_id"), "not declared by configuration")),
            Some(view) => {
                if (view.width, view.height, view.channels) != (cam.width, cam.height, cam.channels) {
                    out.push(Violation::new(
                        cam_at("dims"),
                        format!(
                            "{}x{}x{} differs from configuration {}x{}x{}",
                            cam.width, cam.height, cam.channels, view.width, view.height, view.channels
                        ),
                    ));
                }
            }
        }
        if cam.frame_refs.len() != t_count {
            out.push(Violation::new(
                cam_at("frame_refs"),
                format!("{} references for {} samples", cam.frame_refs.len(), t_count),
            ));
        }
        let frames = cam.source.frame_count();
        if let Some((i, r)) = cam.frame_refs.iter().enumerate().find(|(_, r)| **r >= frames) {
            out.push(Violation::new(
                cam_at(&format!("frame_refs[{i}]")),
                format!("index {r} out of range for {frames} frames"),
            ));
        }
        if let crate::schema::FrameSource::Raw { data, .. } = &cam.source {
            if data.len() != frames as usize * cam.frame_len() {
                out.push(Violation::new(cam_at("frames"), "raw frame block length mismatch"));
            }
        }
    }
    if let Some(valid) = &ep.validity {
        if valid.len() != t_count {
            out.push(Violation::new(at("validity"), format!("{} flags for {} samples", valid.len(), t_count)));
        }
    }
    if let Some(actions) = &ep.actions {
        if actions.actions.ncols() != ACTION_WIDTH {
            out.push(Violation::new(at("actions"), "unified actions must be 44 wide"));
        } else if actions.actions.iter().any(|v| !v.is_finite()) {
            out.push(Violation::new(at("actions"), "non-finite action value"));
        } else if !actions.off_mask_is_zero() {
            out.push(Violation::new(at("actions"), "nonzero value outside occupancy mask"));
        }
    }
    debug_assert_eq!(ep.state_width % STATE_WIDTH_PER_ARM, 0);
}
