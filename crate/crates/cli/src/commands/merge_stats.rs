use std::collections::BTreeMap;

use openh_core::mixture::parse_mixture_table;
use openh_core::normstats::{merge_statistics, ChunkStatistics, Provenance, StatsDocument};

use super::{read_file, write_file};
use crate::args::MergeStatsArgs;
use crate::error::CliError;
use crate::settings::parse_number_pairs;
use crate::Context;

pub fn run(args: &MergeStatsArgs, _ctx: &Context) -> Result<(), CliError> {
    let mut ids = Vec::new();
    let mut stats = Vec::new();
    let mut config_id: Option<String> = None;
    for path in &args.inputs {
        let doc = StatsDocument::from_json(&read_file(path)?)?;
        match &config_id {
            Some(c) if *c != doc.config_id => {
                return Err(CliError::Failed(format!(
                    "{} holds statistics for `{}`, expected `{c}`",
                    path.display(),
                    doc.config_id
                )))
            }
            _ => config_id = Some(doc.config_id.clone()),
        }
        let id = doc
            .dataset_id
            .clone()
            .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        if ids.contains(&id) {
            return Err(CliError::Failed(format!("dataset `{id}` appears twice")));
        }
        ids.push(id);
        stats.push(doc.to_stats()?);
    }

    let table: Option<BTreeMap<String, f64>> = if let Some(path) = &args.mixture {
        let parsed = parse_mixture_table(&read_file(path)?)?;
        Some(parsed.entries.into_iter().map(|e| (e.dataset_id, e.ratio)).collect())
    } else if !args.weights.is_empty() {
        Some(parse_number_pairs(&args.weights, "weight")?.into_iter().collect())
    } else {
        None
    };
    let weights: Vec<f64> = match &table {
        Some(table) => ids
            .iter()
            .map(|id| table.get(id).copied().ok_or_else(|| CliError::Failed(format!("no weight for dataset `{id}`"))))
            .collect::<Result<_, _>>()?,
        None => stats.iter().map(|s| s.count as f64).collect(),
    };

    let refs: Vec<&ChunkStatistics> = stats.iter().collect();
    let merged = merge_statistics(&refs, &weights)?;
    let total: f64 = weights.iter().sum();
    let provenance = ids
        .iter()
        .zip(&weights)
        .map(|(id, w)| Provenance { dataset_id: id.clone(), weight: if total > 0.0 { w / total } else { 0.0 } })
        .collect();
    let doc = StatsDocument::new(&merged, None, config_id.expect("at least one input"), provenance);
    write_file(&args.out, &doc.to_json())?;
    println!("merged {} statistics documents ({} windows) -> {}", ids.len(), merged.count, args.out.display());
    Ok(())
}
