mod augment;
mod evaluate;
mod ingest;
mod synthesize;
mod train;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use speechaug::corpus::PipelineConfig;
use speechaug::par::with_jobs;
use speechaug::Exec;

/// Environment variable holding the log filter (`error`, `warn`, `info`, `debug`, ...).
const LOG_ENV: &str = "SPEECHAUG_LOG";

#[derive(Debug, Parser)]
#[command(name = "speechaug", version, about = "Speech enhancement corpus synthesis, evaluation and toy training")]
struct Cli {
    /// Global seed; overrides `seed` in the config file.
    #[arg(long, global = true, env = "SPEECHAUG_SEED")]
    seed: Option<u64>,

    /// TOML configuration file.
    #[arg(long, global = true, env = "SPEECHAUG_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// On failure, print a JSON error object to stderr.
    #[arg(long, global = true)]
    error_json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan WAV files and directories into a JSON-lines manifest.
    Ingest(ingest::Args),
    /// Write augmented mixture/target pairs with one JSON sidecar each.
    Synthesize(synthesize::Args),
    /// Apply an explicit augmentation spec to one file.
    Augment(augment::Args),
    /// Score a directory of estimates against a directory of references.
    Evaluate(evaluate::Args),
    /// Train the toy mask estimator with the standard or normalized loss.
    TrainToy(train::Args),
}

/// Settings shared by every subcommand.
pub struct Ctx {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    pub exec: Exec,
}

impl Ctx {
    pub fn out_path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn build_ctx(cli: &Cli) -> Result<Ctx> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating output directory {}", cli.out_dir.display()))?;
    Ok(Ctx {
        config,
        out_dir: cli.out_dir.clone(),
        exec: if cli.jobs == 1 { Exec::Sequential } else { Exec::Parallel },
    })
}

fn run(cli: Cli) -> Result<()> {
    let ctx = build_ctx(&cli)?;
    with_jobs(cli.jobs, move || match cli.command {
        Command::Ingest(a) => ingest::run(&ctx, a),
        Command::Synthesize(a) => synthesize::run(&ctx, a),
        Command::Augment(a) => augment::run(&ctx, a),
        Command::Evaluate(a) => evaluate::run(&ctx, a),
        Command::TrainToy(a) => train::run(&ctx, a),
    })
}

fn report(err: &anyhow::Error, as_json: bool) {
    if as_json {
        let kind = err
            .chain()
            .find_map(|e| e.downcast_ref::<speechaug::Error>())
            .map_or("Other", speechaug::Error::kind);
        let obj = serde_json::json!({
            "error": kind,
            "message": err.to_string(),
            "chain": err.chain().skip(1).map(|e| e.to_string()).collect::<Vec<_>>(),
        });
        eprintln!("{obj}");
    } else {
        eprintln!("error: {err:#}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "info")).init();
    let cli = Cli::parse();
    let as_json = cli.error_json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, as_json);
            ExitCode::FAILURE
        }
    }
}

pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
