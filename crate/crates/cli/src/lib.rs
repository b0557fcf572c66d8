//! Batch front-end for the `openh` pipeline.
//!
//! [`run`] executes one parsed invocation; the binary only adds logging and
//! the exit-code mapping.

pub mod args;
pub mod settings;

mod commands;
mod error;

pub use error::CliError;

use args::{Cli, Command, EvalCommand};
use settings::Settings;

/// Resolved global options shared by every subcommand.
pub struct Context {
    pub settings: Settings,
    pub seed: u64,
    pool: rayon::ThreadPool,
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Self, CliError> {
        let settings = Settings::load(cli.global.config_file.as_deref(), &cli.global.overrides)?;
        let seed = cli.global.seed.or(settings.seed).unwrap_or(0);
        let workers = cli.global.workers.or(settings.workers).unwrap_or(0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Context { settings, seed, pool })
    }

    /// Runs `f` inside the worker pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::new(&cli)?;
    match cli.command {
        Command::Validate(a) => commands::validate::run(&a, &ctx),
        Command::Synth(a) => commands::synth::run(&a, &ctx),
        Command::Convert(a) => commands::convert::run(&a, &ctx),
        Command::Stats(a) => commands::stats::run(&a, &ctx),
        Command::MergeStats(a) => commands::merge_stats::run(&a, &ctx),
        Command::Normalize(a) => commands::normalize::run(&a, &ctx),
        Command::Mix(a) => commands::mix::run(&a, &ctx),
        Command::Eval(EvalCommand::Rollout(a)) => commands::rollout::run(&a, &ctx),
        Command::Eval(EvalCommand::Trials(a)) => commands::trials::run(&a, &ctx),
        Command::ServeReplay(a) => commands::rollout::serve_replay(&a, &ctx),
    }
}
