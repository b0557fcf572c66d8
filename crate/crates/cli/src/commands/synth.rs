use openh_core::rng::stage_seed;
use openh_core::schema::{split_episodes, Environment, EpisodeRecord};
use openh_core::store::{
    read_registry, save_dataset, synthesize_episode, synthetic_manifest, write_registry, SynthScenario,
    TrajectoryFamily, REGISTRY_FILE,
};
use rayon::prelude::*;

use super::presets;
use crate::args::{EnvironmentArg, Family, SynthArgs};
use crate::error::CliError;
use crate::Context;

fn family(f: Family) -> TrajectoryFamily {
    match f {
        Family::Circle => TrajectoryFamily::Circle,
        Family::Lissajous => TrajectoryFamily::Lissajous,
        Family::PickPlace => TrajectoryFamily::PickPlaceScript,
    }
}

fn environment(e: EnvironmentArg) -> Environment {
    match e {
        EnvironmentArg::Simulation => Environment::Simulation,
        EnvironmentArg::BenchtopPhantom => Environment::BenchtopPhantom,
        EnvironmentArg::ExVivo => Environment::ExVivo,
        EnvironmentArg::InVivo => Environment::InVivo,
        EnvironmentArg::Clinical => Environment::Clinical,
    }
}

/// Writes `<out>/<dataset>/` plus `<out>/robots.json` (existing entries kept,
/// presets added).
pub fn run(args: &SynthArgs, ctx: &Context) -> Result<(), CliError> {
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    let registry_path = args.out.join(REGISTRY_FILE);
    let registry = if registry_path.is_file() {
        let existing = read_registry(&registry_path)?;
        for config in presets()?.configs() {
            if existing.get(&config.config_id).is_none() {
                existing.register((*config).clone())?;
            }
        }
        existing
    } else {
        presets()?
    };
    let config = registry.lookup(&args.robot)?;

    let base = stage_seed(ctx.seed, &format!("synth/{}", args.dataset));
    let episodes: Vec<EpisodeRecord> = ctx.install(|| {
        (0..args.episodes)
            .into_par_iter()
            .map(|i| {
                let mut scenario = SynthScenario::new(
                    &config.config_id,
                    family(args.family),
                    args.samples,
                    base.wrapping_add(i as u64),
                );
                scenario.dataset_id = args.dataset.clone();
                scenario.episode_id = format!("{}_{i:06}", args.dataset);
                scenario.noise_sigma = args.noise;
                synthesize_episode(&scenario, &config).map(|e| e.record)
            })
            .collect::<Result<_, _>>()
    })?;

    let (train, test) = split_episodes(episodes, args.test_fraction, stage_seed(ctx.seed, "split"))?;
    let test_count = test.len();
    let mut all: Vec<EpisodeRecord> = train.into_iter().chain(test).collect();
    all.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));

    let mut manifest = synthetic_manifest(&args.dataset, &config, environment(args.environment), &all);
    manifest.split_fractions.test = args.test_fraction;
    manifest.split_fractions.train = 1.0 - args.test_fraction;
    let dir = args.out.join(&args.dataset);
    save_dataset(&dir, &manifest, &all)?;
    write_registry(&registry_path, &registry)?;
    println!("{}: wrote {} episodes ({test_count} test) to {}", args.dataset, all.len(), dir.display());
    Ok(())
}
