use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mediaprof::{Error, Pipeline, RunConfig, Stage};

/// Profiles news media by factuality or bias from their audience-overlap graph.
#[derive(Debug, Parser)]
#[command(name = "mediaprof", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, default_value = "mediaprof.json")]
    config: PathBuf,
    /// With `run-all`: stop after this stage.
    #[arg(long, global = true, value_enum)]
    stage: Option<Stage>,
    /// Ignore cached manifests and rerun.
    #[arg(long, global = true)]
    force: bool,
    /// Overrides the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic crawl, metrics and labels.
    Synth,
    /// Crawl the audience-overlap graph from the labeled seeds.
    BuildGraph,
    /// Fill missing traffic metrics from graph neighbors.
    Impute,
    /// Train the configured node embeddings.
    Embed,
    /// Cross-validate one classifier per representation channel.
    Train,
    /// Fuse channel posteriors.
    Fuse,
    /// Score every system against the majority baseline.
    Evaluate,
    /// Write the final report.
    Report,
    /// Run every stage, reusing fresh cached outputs.
    RunAll,
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        Some(match self {
            Command::Synth => Stage::Synth,
            Command::BuildGraph => Stage::BuildGraph,
            Command::Impute => Stage::Impute,
            Command::Embed => Stage::Embed,
            Command::Train => Stage::Train,
            Command::Fuse => Stage::Fuse,
            Command::Evaluate => Stage::Evaluate,
            Command::Report => Stage::Report,
            Command::RunAll => return None,
        })
    }
}

fn run(cli: &Cli) -> mediaprof::Result<()> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let pipeline = Pipeline::new(config);
    match cli.command.stage() {
        Some(stage) => {
            let ran = pipeline.run_stage(stage, cli.force)?;
            if !ran {
                log::info!("{stage} is up to date; pass --force to rerun");
            }
        }
        None => {
            let summary = pipeline.run_all(cli.stage, cli.force)?;
            log::info!(
                "executed [{}], reused [{}]",
                join(&summary.executed),
                join(&summary.skipped)
            );
        }
    }
    Ok(())
}

fn join(stages: &[Stage]) -> String {
    stages.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Leakage(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
