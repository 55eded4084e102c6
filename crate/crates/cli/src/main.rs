//! Topic extraction over document-term matrices: binarization,
//! formal concepts, conceptual-similarity clustering, validity sweeps, and a
//! batched completion-model topic protocol.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use topcat::binarize::Strategy;

use crate::config::ResolvedConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("pipeline: {0}")]
    Pipeline(String),
    #[error("{0}")]
    Core(#[from] topcat::Error),
}

#[derive(Parser)]
#[command(
    name = "topcat",
    version,
    about = "Topic extraction via formal concept analysis and batched LLM prompts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (TOML)
    #[arg(long, global = true, default_value = "topcat.toml")]
    config: PathBuf,

    /// Output directory for artifacts and the run manifest
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the configured binarization strategies (repeatable)
    #[arg(long = "strategy", global = true, value_parser = parse_strategy)]
    strategies: Vec<Strategy>,

    /// Override the configured beta thresholds (repeatable)
    #[arg(long = "beta", global = true)]
    betas: Vec<f64>,

    /// Override the configured cluster counts (repeatable)
    #[arg(long = "k", global = true)]
    ks: Vec<usize>,

    /// Reject any model output that strays from the expected line grammar
    #[arg(long, global = true)]
    strict: bool,

    /// Upper bound on parallel workers
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Use only offline sources (disambiguation fixture, mock completions)
    #[arg(long, global = true)]
    offline: bool,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: topcat::Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics after POS filtering (lemma level)
    Stats,
    /// Disambiguated terms and the document-term frequency matrix
    Extract,
    /// Binary formal contexts for each strategy and beta
    Binarize,
    /// Formal concept enumeration per context
    Concepts,
    /// Similarity, dendrogram, and flat cluster assignments
    Cluster,
    /// Validity metrics over the strategy x beta x k grid
    Sweep,
    /// Batched topic generation, merge, and labeling via a completion model
    Llm,
    /// Side-by-side report of concept clusters and model topics
    Compare,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = ResolvedConfig::load(
        &cli.config,
        &cli.strategies,
        &cli.betas,
        &cli.ks,
        cli.strict,
        cli.jobs.max(1),
        cli.offline,
    )?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cli.out.display())))?;
    // A second in-process invocation keeps the first pool; that only happens
    // in tests.
    rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build_global().ok();
    match cli.command {
        Command::Stats => commands::stats(&cfg, &cli.out),
        Command::Extract => commands::extract(&cfg, &cli.out),
        Command::Binarize => commands::binarize(&cfg, &cli.out),
        Command::Concepts => commands::concepts(&cfg, &cli.out),
        Command::Cluster => commands::cluster(&cfg, &cli.out),
        Command::Sweep => commands::sweep_cmd(&cfg, &cli.out),
        Command::Llm => commands::llm(&cfg, &cli.out),
        Command::Compare => commands::compare(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', "; ");
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
