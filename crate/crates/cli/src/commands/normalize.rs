use std::collections::BTreeSet;
use std::sync::Arc;

use ndarray::Array2;
use openh_core::normstats::{quantile_normalize, zscore_normalize, Normalizer, StatsDocument};
use openh_core::store::{load_dataset, STATS_FILE};
use openh_core::ACTION_WIDTH;
use serde_json::json;

use super::{in_split, read_file, write_file};
use crate::args::{NormalizeArgs, NormalizerArg};
use crate::error::CliError;
use crate::Context;

/// Normalizes every window and reports per-cell means of the normalized
/// values, the clipped fraction and degenerate cells. Values are computed in
/// memory only; the dataset is not rewritten.
pub fn run(args: &NormalizeArgs, _ctx: &Context) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset)?;
    let stats_path = args.stats.clone().unwrap_or_else(|| args.dataset.join(STATS_FILE));
    let doc = StatsDocument::from_json(&read_file(&stats_path)?)?;
    if doc.config_id != dataset.manifest.robot_config_id {
        return Err(CliError::Failed(format!(
            "statistics are for `{}`, dataset uses `{}`",
            doc.config_id, dataset.manifest.robot_config_id
        )));
    }
    let stats = Arc::new(doc.to_stats()?);
    let horizon = stats.horizon;
    let normalizer = match args.kind {
        NormalizerArg::Zscore => Normalizer::temporal_zscore(stats),
        NormalizerArg::Quantile => Normalizer::quantile(stats),
    };
    let bound = normalizer.clip_bound;

    let mut sum = Array2::<f64>::zeros((horizon, ACTION_WIDTH));
    let mut windows = 0u64;
    let mut clipped = 0u64;
    let mut degenerate = BTreeSet::new();
    for episode in dataset.episodes.iter().filter(|e| in_split(e, args.split)) {
        let actions = &episode
            .actions
            .as_ref()
            .ok_or_else(|| CliError::Failed(format!("episode {} has no converted actions", episode.episode_id)))?
            .actions;
        for window in actions.windows((horizon, ACTION_WIDTH)) {
            let values = match args.kind {
                NormalizerArg::Zscore => zscore_normalize(window, &normalizer)?,
                NormalizerArg::Quantile => {
                    let out = quantile_normalize(window, &normalizer)?;
                    degenerate.extend(out.degenerate);
                    out.values
                }
            };
            clipped += values.iter().filter(|v| v.abs() >= bound).count() as u64;
            sum += &values;
            windows += 1;
        }
    }
    if windows == 0 {
        return Err(CliError::Failed(format!("no {horizon}-step windows to normalize")));
    }
    let mean = sum / windows as f64;
    let max_abs_mean = mean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let summary = json!({
        "dataset_id": dataset.manifest.dataset_id,
        "normalizer": normalizer.kind,
        "clip_bound": bound,
        "horizon": horizon,
        "dims": ACTION_WIDTH,
        "windows": windows,
        "max_abs_mean": max_abs_mean,
        "clipped_fraction": clipped as f64 / (windows as f64 * (horizon * ACTION_WIDTH) as f64),
        "degenerate_cells": degenerate.iter().map(|(h, d)| [h, d]).collect::<Vec<_>>(),
        "mean": mean.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            println!(
                "{}: {windows} windows, max |mean| {max_abs_mean:e} -> {}",
                dataset.manifest.dataset_id,
                path.display()
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}
