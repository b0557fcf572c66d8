use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use openh_core::eval::protocol::{serve_lines, serve_staged, StagedDirGenerator, SubprocessGenerator};
use openh_core::eval::{
    aggregate_rollouts, rollout_episode_from_record, run_rollout, Category, ConstantGenerator, FrameGenerator,
    ReplayGenerator, RolloutConfig, RolloutEpisode, RolloutMetricSeries,
};
use openh_core::schema::Split;
use openh_core::store::load_dataset;
use rayon::prelude::*;

use super::{csv_field, prepare_episode, registry_for, write_file};
use crate::args::{RolloutArgs, ServeReplayArgs};
use crate::error::CliError;
use crate::settings::{
    parse_pairs, DEFAULT_CHUNKS, DEFAULT_CHUNK_SIZE, DEFAULT_EPISODES_PER_DATASET, DEFAULT_SEEDS, DEFAULT_TARGET_RATE,
    DEFAULT_TIMEOUT_SECS,
};
use crate::Context;

const POLL: Duration = Duration::from_millis(20);
const STAGE_DIR: &str = "generator_stage";

fn parse_category(text: &str) -> Result<Category, CliError> {
    match text {
        "benchtop" => Ok(Category::Benchtop),
        "tissue" => Ok(Category::Tissue),
        other => Err(CliError::Usage(format!("unknown category `{other}` (benchtop or tissue)"))),
    }
}

/// A dataset's episodes prepared for rollout, or why each could not be.
struct Loaded {
    dataset_id: String,
    category: Category,
    episodes: Vec<Result<RolloutEpisode, (String, CliError)>>,
}

fn load_for_rollout(
    dir: &Path,
    registry: Option<&Path>,
    rate: f64,
    camera: usize,
    split: Option<Split>,
    limit: usize,
    ctx: &Context,
) -> Result<Loaded, CliError> {
    let dataset = load_dataset(dir)?;
    let registry = registry_for(registry, dir)?;
    let config = registry.lookup(&dataset.manifest.robot_config_id)?;
    let mut records: Vec<_> = dataset.episodes.iter().filter(|e| split.is_none_or(|s| e.split == s)).collect();
    records.sort_by(|a, b| a.episode_id.cmp(&b.episode_id));
    records.truncate(limit);
    let episodes = ctx.install(|| {
        records
            .par_iter()
            .map(|record| {
                prepare_episode(record, &config, rate)
                    .and_then(|r| rollout_episode_from_record(&r, camera).map_err(CliError::from))
                    .map_err(|e| (record.episode_id.clone(), e))
            })
            .collect()
    });
    let category = match dataset.manifest.environment {
        Some(env) if env.is_tissue() => Category::Tissue,
        _ => Category::Benchtop,
    };
    Ok(Loaded { dataset_id: dataset.manifest.dataset_id, category, episodes })
}

fn build_generator(
    spec: &str,
    prepared: &[&RolloutEpisode],
    stage: &Path,
    timeout: Duration,
) -> Result<Box<dyn FrameGenerator>, CliError> {
    if spec == "identity" {
        let mut replay = ReplayGenerator::new();
        prepared.iter().for_each(|e| replay.insert(e));
        return Ok(Box::new(replay));
    }
    if let Some(level) = spec.strip_prefix("constant:") {
        let level: f64 = level
            .parse()
            .ok()
            .filter(|v: &f64| (0.0..=1.0).contains(v))
            .ok_or_else(|| CliError::Usage(format!("constant level `{level}` must be a number in [0, 1]")))?;
        return Ok(Box::new(ConstantGenerator(level)));
    }
    if let Some(command) = spec.strip_prefix("cmd:") {
        let mut words = command.split_whitespace();
        let program = words.next().ok_or_else(|| CliError::Usage("`cmd:` needs a program".into()))?;
        let args: Vec<String> = words.map(String::from).collect();
        return Ok(Box::new(SubprocessGenerator::spawn(program, &args, stage, timeout)?));
    }
    if let Some(dir) = spec.strip_prefix("stage:") {
        return Ok(Box::new(StagedDirGenerator::new(Path::new(dir), timeout, POLL)?));
    }
    Err(CliError::Usage(format!("unknown generator `{spec}` (identity, constant:<v>, cmd:<program>, stage:<dir>)")))
}

pub fn run(args: &RolloutArgs, ctx: &Context) -> Result<(), CliError> {
    let s = &ctx.settings;
    let config = RolloutConfig {
        chunk_size: args.chunk_size.or(s.chunk_size).unwrap_or(DEFAULT_CHUNK_SIZE),
        chunk_count: args.chunks.or(s.chunks).unwrap_or(DEFAULT_CHUNKS),
    };
    if config.frames() == 0 {
        return Err(CliError::Usage("--chunks and --chunk-size must be at least 1".into()));
    }
    let rate = args.target_rate.or(s.target_rate).unwrap_or(DEFAULT_TARGET_RATE);
    let seeds = args.seeds.or(s.seeds).unwrap_or(DEFAULT_SEEDS);
    let limit = args.episodes_per_dataset.or(s.episodes_per_dataset).unwrap_or(DEFAULT_EPISODES_PER_DATASET);
    let timeout = Duration::from_secs_f64(args.timeout_secs.or(s.timeout_secs).unwrap_or(DEFAULT_TIMEOUT_SECS));

    let mut overrides: BTreeMap<String, Category> = BTreeMap::new();
    for (id, c) in &s.category {
        overrides.insert(id.clone(), parse_category(c)?);
    }
    for (id, c) in parse_pairs(&args.categories, "category")? {
        overrides.insert(id, parse_category(&c)?);
    }

    let mut loaded = Vec::new();
    for dir in &args.datasets {
        let l = load_for_rollout(dir, args.registry.as_deref(), rate, args.camera, Some(Split::Test), limit, ctx)?;
        if l.episodes.is_empty() {
            return Err(CliError::Failed(format!("dataset `{}` has no test-split episodes", l.dataset_id)));
        }
        loaded.push(l);
    }

    // Jobs in (dataset, episode, seed) order; results are collected in the same order.
    let mut failures: Vec<(String, String, u64, String)> = Vec::new();
    let mut jobs: Vec<(&RolloutEpisode, u64)> = Vec::new();
    for l in &loaded {
        for ep in &l.episodes {
            for seed in ctx.seed..ctx.seed + seeds {
                match ep {
                    Ok(e) => jobs.push((e, seed)),
                    Err((id, err)) => failures.push((l.dataset_id.clone(), id.clone(), seed, err.to_string())),
                }
            }
        }
    }
    let prepared: Vec<&RolloutEpisode> = loaded.iter().flat_map(|l| l.episodes.iter().flatten()).collect();
    let stage = args.out.join(STAGE_DIR);
    let generator = build_generator(&args.generator, &prepared, &stage, timeout)?;
    let results: Vec<Result<RolloutMetricSeries, String>> = ctx.install(|| {
        jobs.par_iter()
            .map(|(ep, seed)| run_rollout(ep, *seed, config, generator.as_ref()).map_err(|e| e.to_string()))
            .collect()
    });
    drop(generator);
    if stage.exists() {
        std::fs::remove_dir_all(&stage).map_err(|e| CliError::io(&stage, e))?;
    }

    let mut series = Vec::new();
    for ((ep, seed), result) in jobs.iter().zip(results) {
        match result {
            Ok(s) => series.push(s),
            Err(message) => {
                log::warn!("{}/{} seed {seed}: {message}", ep.dataset_id, ep.episode_id);
                failures.push((ep.dataset_id.clone(), ep.episode_id.clone(), *seed, message));
            }
        }
    }
    failures.sort();

    let mut frames_csv = String::from("dataset_id,episode_id,seed,frame_index,chunk_index,boundary,l1,ssim\n");
    for m in &series {
        for f in 0..m.frames() {
            let _ = writeln!(
                frames_csv,
                "{},{},{},{f},{},{},{},{}",
                csv_field(&m.dataset_id),
                csv_field(&m.episode_id),
                m.seed,
                m.chunk_index(f),
                m.is_chunk_boundary(f),
                m.l1[f],
                m.ssim[f]
            );
        }
    }
    let mut failures_csv = String::from("dataset_id,episode_id,seed,error\n");
    for (d, e, seed, message) in &failures {
        let _ = writeln!(failures_csv, "{},{},{seed},{}", csv_field(d), csv_field(e), csv_field(message));
    }
    write_file(&args.out.join("rollout_frames.csv"), &frames_csv)?;
    write_file(&args.out.join("rollout_failures.csv"), &failures_csv)?;

    if series.is_empty() {
        return Err(CliError::Failed(format!("every rollout failed ({} failures)", failures.len())));
    }
    let categories: BTreeMap<String, Category> = loaded
        .iter()
        .filter(|l| series.iter().any(|s| s.dataset_id == l.dataset_id))
        .map(|l| (l.dataset_id.clone(), overrides.get(&l.dataset_id).copied().unwrap_or(l.category)))
        .collect();
    let summaries = aggregate_rollouts(&series, &categories)?;
    let mut summary_csv = String::from("category,metric,frame_index,mean,std\n");
    for c in &summaries {
        for (metric, curves) in [("l1", &c.l1), ("ssim", &c.ssim)] {
            for (f, (m, sd)) in curves.mean.iter().zip(&curves.std).enumerate() {
                let _ = writeln!(summary_csv, "{},{metric},{f},{m},{sd}", c.category);
            }
        }
    }
    write_file(&args.out.join("rollout_summary.csv"), &summary_csv)?;

    for c in &summaries {
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "{}: {} rollouts over {} seeds, mean L1 {:.6}, mean SSIM {:.6}",
            c.category,
            c.series,
            c.seeds,
            avg(&c.l1.mean),
            avg(&c.ssim.mean)
        );
    }
    if !failures.is_empty() {
        println!("{} rollout(s) failed; see rollout_failures.csv", failures.len());
    }
    Ok(())
}

/// Replays recorded frames for every episode of the given datasets.
pub fn serve_replay(args: &ServeReplayArgs, ctx: &Context) -> Result<(), CliError> {
    let rate = args.target_rate.or(ctx.settings.target_rate).unwrap_or(DEFAULT_TARGET_RATE);
    let mut replay = ReplayGenerator::new();
    for dir in &args.datasets {
        let loaded = load_for_rollout(dir, args.registry.as_deref(), rate, args.camera, None, usize::MAX, ctx)?;
        for ep in loaded.episodes.iter().flatten() {
            replay.insert(ep);
        }
    }
    match &args.stage {
        Some(stage) => {
            let stop = AtomicBool::new(false);
            let stop_file = stage.join("STOP");
            std::thread::scope(|scope| {
                scope.spawn(|| {
                    while !stop.load(Ordering::Relaxed) {
                        if stop_file.exists() {
                            stop.store(true, Ordering::Relaxed);
                        }
                        std::thread::sleep(POLL);
                    }
                });
                let result = serve_staged(stage, &replay, POLL, &stop);
                stop.store(true, Ordering::Relaxed);
                result
            })?;
        }
        None => serve_lines(std::io::stdin().lock(), std::io::stdout().lock(), &replay)?,
    }
    Ok(())
}
