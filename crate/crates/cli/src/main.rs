mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use gecmf_core::evaluation::RerankMode;
use gecmf_core::{MaskStrategy, MatchMode, Scheme};

use crate::config::{ModelKind, Overrides, RunConfig, ENDPOINT_ENV};

/// Mask-and-fill grammatical error correction experiments.
#[derive(Parser, Debug)]
#[command(name = "gecmf", version)]
struct Cli {
    /// TOML file with run settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Align parallel sentence files and print the extracted edits as M2.
    Extract {
        /// One tokenized source sentence per line.
        #[arg(long)]
        source: PathBuf,
        /// One tokenized corrected sentence per line, parallel to --source.
        #[arg(long)]
        target: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand an M2 corpus into single-edit instance files.
    Expand(RunArgs),
    /// Mask an instance file with one strategy.
    Mask(RunArgs),
    /// Mask, fill and score; writes report.json, report.txt and a manifest.
    Evaluate(RunArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// M2 corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Instance file written by `expand`.
    #[arg(long)]
    instances: Option<PathBuf>,
    /// each-edit or last-edit (default: both).
    #[arg(long)]
    scheme: Option<Scheme>,
    /// origin, target or single (default for evaluate: all three).
    #[arg(long)]
    strategy: Option<MaskStrategy>,
    /// gold-mock, lexicon-mock or remote.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Model server base URL [env: GECMF_ENDPOINT].
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long = "top-k")]
    top_k: Option<usize>,
    /// exact or any-token (default: exact for origin/target, any-token for single).
    #[arg(long)]
    mode: Option<MatchMode>,
    /// Score deletion residuals as direct applications instead of skipping them.
    #[arg(long)]
    include_deletions: bool,
    /// Oracle reranking of candidates before rank-1 assembly.
    #[arg(long)]
    oracle_rerank: bool,
    /// Rank at which gold-mock places the gold piece.
    #[arg(long)]
    gold_rank: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(self) -> Overrides {
        Overrides {
            corpus: self.corpus,
            instances: self.instances,
            scheme: self.scheme,
            strategy: self.strategy,
            model: self.model,
            endpoint: self.endpoint,
            top_k: self.top_k,
            mode: self.mode,
            include_deletions: self.include_deletions.then_some(true),
            rerank: self.oracle_rerank.then_some(RerankMode::Oracle),
            gold_rank: self.gold_rank,
            jobs: self.jobs,
            seed: self.seed,
            out: self.out,
            ..Overrides::default()
        }
    }
}

fn resolve(args: RunArgs, config: Option<&PathBuf>) -> Result<RunConfig> {
    let file = match config {
        Some(path) => Overrides::load(path)?,
        None => Overrides::default(),
    };
    RunConfig::resolve(args.overrides(), file, std::env::var(ENDPOINT_ENV).ok())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_ref();
    match cli.command {
        Command::Extract { source, target, out } => commands::extract(&source, &target, out.as_deref()),
        Command::Expand(args) => commands::expand(&resolve(args, config)?),
        Command::Mask(args) => commands::mask(&resolve(args, config)?),
        Command::Evaluate(args) => commands::evaluate(&resolve(args, config)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
