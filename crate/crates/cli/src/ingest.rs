use std::path::PathBuf;

use anyhow::{Context, Result};
use speechaug::corpus::{ingest, SourceKind};

use crate::Ctx;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// What the files contain.
    #[arg(long, value_enum)]
    kind: Kind,

    /// Manifest file name inside the output directory.
    #[arg(long)]
    name: Option<String>,

    /// WAV files or directories (searched recursively).
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Kind {
    Speech,
    Noise,
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let (kind, default_name) = match args.kind {
        Kind::Speech => (SourceKind::Speech, "speech.jsonl"),
        Kind::Noise => (SourceKind::Noise, "noise.jsonl"),
    };
    let report = ingest(&args.paths, kind).context("ingesting audio")?;
    let path = ctx.out_path(args.name.as_deref().unwrap_or(default_name));
    report.manifest.save(&path)?;
    let total: f64 = report.manifest.entries.iter().map(|e| e.duration_s).sum();
    let summary = serde_json::json!({
        "manifest": path,
        "entries": report.manifest.len(),
        "total_duration_s": total,
        "failures": report.failures.iter().map(|f| serde_json::json!({"path": f.path, "reason": f.reason})).collect::<Vec<_>>(),
        "warnings": report.warnings,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
