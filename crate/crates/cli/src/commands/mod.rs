pub mod convert;
pub mod merge_stats;
pub mod mix;
pub mod normalize;
pub mod rollout;
pub mod stats;
pub mod synth;
pub mod trials;
pub mod validate;

use std::fs;
use std::path::Path;

use openh_core::kinematics::resample_stride;
use openh_core::schema::{ConfigRegistry, ControlSpace, EpisodeRecord, RobotConfiguration, Split};
use openh_core::store::{convert_control_space, preset_configs, read_registry, REGISTRY_FILE};

use crate::args::SplitArg;
use crate::error::CliError;

/// Registry for a dataset: `--registry`, else `robots.json` beside the
/// dataset directory, else the built-in presets.
pub(crate) fn registry_for(explicit: Option<&Path>, dataset: &Path) -> Result<ConfigRegistry, CliError> {
    if let Some(path) = explicit {
        return Ok(read_registry(path)?);
    }
    if let Some(parent) = dataset.parent() {
        let path = parent.join(REGISTRY_FILE);
        if path.is_file() {
            return Ok(read_registry(&path)?);
        }
    }
    presets()
}

pub(crate) fn presets() -> Result<ConfigRegistry, CliError> {
    let registry = ConfigRegistry::new();
    for config in preset_configs() {
        registry.register(config)?;
    }
    Ok(registry)
}

/// Sample rate implied by the timestamps, falling back to the configured
/// native rate. Resampled datasets keep their true rate this way.
pub(crate) fn measured_rate(episode: &EpisodeRecord, config: &RobotConfiguration) -> f64 {
    let n = episode.sample_count();
    if n >= 2 {
        let span = episode.timestamps[n - 1] - episode.timestamps[0];
        if span > 0.0 {
            return (n - 1) as f64 / span;
        }
    }
    config.native_rate_hz
}

/// Resamples to `target_rate` and converts to relative end-effector actions.
pub(crate) fn prepare_episode(
    episode: &EpisodeRecord,
    config: &RobotConfiguration,
    target_rate: f64,
) -> Result<EpisodeRecord, CliError> {
    let resampled = resample_stride(episode, measured_rate(episode, config), target_rate)?;
    Ok(convert_control_space(&resampled, ControlSpace::RelativeEef, config)?)
}

pub(crate) fn in_split(episode: &EpisodeRecord, split: SplitArg) -> bool {
    match split {
        SplitArg::Train => episode.split == Split::Train,
        SplitArg::Test => episode.split == Split::Test,
        SplitArg::All => true,
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Quotes a CSV field when it holds a separator, quote or newline.
pub(crate) fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Refuses to write a dataset over its own input.
pub(crate) fn ensure_distinct(input: &Path, output: &Path) -> Result<(), CliError> {
    let same = match (input.canonicalize(), output.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(CliError::Usage(format!("output {} is the input directory", output.display())));
    }
    Ok(())
}
