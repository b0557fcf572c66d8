use std::collections::BTreeMap;

use openh_core::mixture::{format_mixture_table, sample_stream, solve_mixture, MixtureSpec};
use openh_core::store::read_manifest;

use super::write_file;
use crate::args::MixArgs;
use crate::error::CliError;
use crate::settings::parse_number_pairs;
use crate::Context;

/// Sizes come from dataset manifests (total hours) followed by `--size`
/// entries, in the order given.
pub fn run(args: &MixArgs, ctx: &Context) -> Result<(), CliError> {
    let mut entries = Vec::new();
    for dir in &args.datasets {
        let manifest = read_manifest(dir)?;
        entries.push((manifest.dataset_id, manifest.total_seconds / 3600.0));
    }
    entries.extend(parse_number_pairs(&args.sizes, "size")?);
    if entries.is_empty() {
        return Err(CliError::Usage("give dataset directories or --size entries".into()));
    }
    let mut caps: BTreeMap<String, f64> = ctx.settings.cap.clone();
    caps.extend(parse_number_pairs(&args.caps, "cap")?);

    let spec = MixtureSpec { entries, caps, seed: ctx.seed };
    let solved = solve_mixture(&spec)?;
    let table = format_mixture_table(&solved);
    match &args.out {
        Some(path) => write_file(path, &table)?,
        None => print!("{table}"),
    }

    if let Some(steps) = args.steps {
        let picks = sample_stream(&solved, ctx.seed, steps)?;
        let mut counts = vec![0u64; solved.len()];
        picks.iter().for_each(|&i| counts[i] += 1);
        if let Some(path) = &args.stream_out {
            let mut text = String::with_capacity(picks.len() * 8);
            for &i in &picks {
                text.push_str(&solved[i].dataset_id);
                text.push('\n');
            }
            write_file(path, &text)?;
        }
        for (entry, count) in solved.iter().zip(&counts) {
            let share = if steps > 0 { *count as f64 / steps as f64 } else { 0.0 };
            eprintln!("{}: {count} of {steps} steps ({share:.4}, target {:.4})", entry.dataset_id, entry.ratio);
        }
    }
    Ok(())
}
