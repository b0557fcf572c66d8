use openh_core::normstats::{compute_statistics, merge_statistics, ChunkStatistics, StatsDocument};
use openh_core::store::{load_dataset, STATS_FILE};
use openh_core::ACTION_WIDTH;
use rayon::prelude::*;

use super::{in_split, write_file};
use crate::args::StatsArgs;
use crate::error::CliError;
use crate::settings::DEFAULT_HORIZON;
use crate::Context;

/// Statistics over every `horizon`-step window of converted actions.
///
/// Episodes are reduced in parallel and merged in episode order, weighted by
/// their window counts, so the result does not depend on the worker count.
pub fn run(args: &StatsArgs, ctx: &Context) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset)?;
    let horizon = args.horizon.or(ctx.settings.horizon).unwrap_or(DEFAULT_HORIZON);
    if horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let episodes: Vec<_> = dataset.episodes.iter().filter(|e| in_split(e, args.split)).collect();
    if let Some(raw) = episodes.iter().find(|e| e.actions.is_none()) {
        return Err(CliError::Failed(format!(
            "episode {} has no converted actions; run `openh convert` first",
            raw.episode_id
        )));
    }
    let per_episode: Vec<ChunkStatistics> = ctx.install(|| {
        episodes
            .par_iter()
            .map(|e| {
                let actions = &e.actions.as_ref().expect("checked above").actions;
                compute_statistics(horizon, ACTION_WIDTH, actions.windows((horizon, ACTION_WIDTH)))
            })
            .collect::<Result<_, _>>()
    })?;
    let stats = if per_episode.is_empty() {
        ChunkStatistics::empty(horizon, ACTION_WIDTH)
    } else {
        let refs: Vec<&ChunkStatistics> = per_episode.iter().collect();
        let weights: Vec<f64> = per_episode.iter().map(|s| s.count as f64).collect();
        if weights.iter().all(|w| *w == 0.0) {
            ChunkStatistics::empty(horizon, ACTION_WIDTH)
        } else {
            merge_statistics(&refs, &weights)?
        }
    };
    if stats.count == 0 {
        return Err(CliError::Failed(format!(
            "no {horizon}-step windows in the selected episodes of {}",
            dataset.manifest.dataset_id
        )));
    }
    let doc = StatsDocument::new(
        &stats,
        Some(dataset.manifest.dataset_id.clone()),
        &dataset.manifest.robot_config_id,
        vec![],
    );
    let out = args.out.clone().unwrap_or_else(|| args.dataset.join(STATS_FILE));
    write_file(&out, &doc.to_json())?;
    println!(
        "{}: {} windows of {horizon} steps from {} episodes -> {}",
        dataset.manifest.dataset_id,
        stats.count,
        episodes.len(),
        out.display()
    );
    Ok(())
}
