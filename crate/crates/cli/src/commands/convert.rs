use openh_core::schema::{EpisodeRecord, KinematicRepresentation};
use openh_core::store::{load_dataset, save_dataset, write_registry, REGISTRY_FILE};
use rayon::prelude::*;

use super::{ensure_distinct, prepare_episode, registry_for};
use crate::args::ConvertArgs;
use crate::error::CliError;
use crate::settings::DEFAULT_TARGET_RATE;
use crate::Context;

pub fn run(args: &ConvertArgs, ctx: &Context) -> Result<(), CliError> {
    ensure_distinct(&args.dataset, &args.out)?;
    let dataset = load_dataset(&args.dataset)?;
    let registry = registry_for(args.registry.as_deref(), &args.dataset)?;
    let config = registry.lookup(&dataset.manifest.robot_config_id)?;
    let rate = args.target_rate.or(ctx.settings.target_rate).unwrap_or(DEFAULT_TARGET_RATE);

    let episodes: Vec<EpisodeRecord> = ctx
        .install(|| dataset.episodes.par_iter().map(|e| prepare_episode(e, &config, rate)).collect::<Result<_, _>>())?;
    let mut manifest = dataset.manifest.clone();
    manifest.kinematic_representation = Some(KinematicRepresentation::RelativeCartesian);
    save_dataset(&args.out, &manifest, &episodes)?;

    // Keep the output resolvable with the same registry lookup rule.
    if let Some(parent) = args.out.parent() {
        let path = parent.join(REGISTRY_FILE);
        if !path.exists() {
            write_registry(&path, &registry)?;
        }
    }
    let samples: usize = episodes.iter().map(|e| e.sample_count()).sum();
    println!(
        "{}: converted {} episodes ({samples} samples at ~{rate} Hz) to {}",
        manifest.dataset_id,
        episodes.len(),
        args.out.display()
    );
    Ok(())
}
