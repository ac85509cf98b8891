use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use speechaug::corpus::{
    generate_epoch, wav::wav_bytes, Manifest, Sidecar, SourceRef, SyntheticCorpus, WavEncoding,
};
use speechaug::Waveform;

use crate::Ctx;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Speech manifest (JSON lines, from `ingest`).
    #[arg(long, requires = "noise", conflicts_with = "synthetic")]
    speech: Option<PathBuf>,

    /// Noise manifest.
    #[arg(long, requires = "speech", conflicts_with = "synthetic")]
    noise: Option<PathBuf>,

    /// Use generated speech-like and noise sources instead of manifests.
    #[arg(long)]
    synthetic: bool,

    /// Number of synthetic speech sources.
    #[arg(long, default_value_t = 8)]
    synthetic_speech: usize,

    /// Number of synthetic noise sources.
    #[arg(long, default_value_t = 4)]
    synthetic_noise: usize,

    /// Length of each synthetic speech source in seconds (noise is twice as long).
    #[arg(long, default_value_t = 2.0)]
    synthetic_duration: f64,

    /// Pairs to write; defaults to `count` from the config.
    #[arg(long)]
    count: Option<usize>,

    /// Epoch index; each epoch re-draws pairings and augmentation.
    #[arg(long, default_value_t = 0)]
    epoch: u64,

    #[arg(long, value_enum, default_value_t = Encoding::Float32)]
    encoding: Encoding,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Encoding {
    Float32,
    Pcm16,
}

pub struct Sources {
    pub speech: Vec<Waveform>,
    pub noise: Vec<Waveform>,
    pub speech_refs: Vec<SourceRef>,
    pub noise_refs: Vec<SourceRef>,
}

impl Sources {
    pub fn from_manifests(speech: &PathBuf, noise: &PathBuf) -> Result<Self> {
        let load = |p: &PathBuf| -> Result<(Vec<Waveform>, Vec<SourceRef>)> {
            let m = Manifest::load(p).with_context(|| format!("reading manifest {}", p.display()))?;
            let audio = m.load_audio().with_context(|| format!("decoding files of {}", p.display()))?;
            let refs = m
                .entries
                .iter()
                .map(|e| SourceRef {
                    id: e.id.clone(),
                    path: Some(e.path.clone()),
                })
                .collect();
            Ok((audio, refs))
        };
        let (speech, speech_refs) = load(speech)?;
        let (noise, noise_refs) = load(noise)?;
        Ok(Sources {
            speech,
            noise,
            speech_refs,
            noise_refs,
        })
    }

    pub fn synthetic(n_speech: usize, n_noise: usize, duration_s: f64, seed: u64) -> Result<Self> {
        let c = SyntheticCorpus::generate(n_speech, n_noise, duration_s, seed)?;
        let refs = |prefix: &str, n: usize| {
            (0..n)
                .map(|i| SourceRef {
                    id: format!("{prefix}-{i:03}"),
                    path: None,
                })
                .collect()
        };
        Ok(Sources {
            speech_refs: refs("synth-speech", n_speech),
            noise_refs: refs("synth-noise", n_noise),
            speech: c.speech,
            noise: c.noise,
        })
    }
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let sources = match (&args.speech, &args.noise, args.synthetic) {
        (Some(s), Some(n), false) => Sources::from_manifests(s, n)?,
        (None, None, true) => Sources::synthetic(
            args.synthetic_speech,
            args.synthetic_noise,
            args.synthetic_duration,
            ctx.config.seed,
        )?,
        _ => bail!("give either --speech and --noise manifests, or --synthetic"),
    };
    let mut plan = ctx.config.batch_plan();
    if let Some(n) = args.count {
        plan.examples_per_epoch = n;
    }
    let encoding = match args.encoding {
        Encoding::Float32 => WavEncoding::Float32,
        Encoding::Pcm16 => WavEncoding::Pcm16,
    };
    let epoch = generate_epoch(&sources.speech, &sources.noise, &plan, args.epoch, ctx.exec)?;

    let mut written = 0usize;
    let mut clipped = 0usize;
    for g in epoch.examples() {
        let id = format!("e{:03}_{:06}", args.epoch, g.plan.index);
        let sidecar = Sidecar::new(
            id.clone(),
            plan.global_seed,
            &g.plan,
            sources.speech_refs[g.plan.speech_idx].clone(),
            sources.noise_refs[g.plan.noise_idx].clone(),
            plan.vad,
            &g.example,
        );
        let write = |suffix: &str, bytes: Vec<u8>| -> Result<()> {
            let p = ctx.out_path(format!("{id}_{suffix}"));
            std::fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
        };
        write("mixture.wav", wav_bytes(&g.example.mixture, encoding)?)?;
        write("target.wav", wav_bytes(&g.example.target, encoding)?)?;
        write("sidecar.json", sidecar.to_json()?.into_bytes())?;
        if g.example.clipped_samples > 0 {
            clipped += 1;
            if matches!(encoding, WavEncoding::Pcm16) {
                log::warn!("{id}: {} samples clipped by 16-bit output", g.example.clipped_samples);
            }
        }
        written += 1;
    }
    let summary = serde_json::json!({
        "written": written,
        "skipped": epoch.skipped.len(),
        "skipped_examples": epoch.skipped.iter().map(|s| serde_json::json!({"index": s.index, "error": s.error.to_string()})).collect::<Vec<_>>(),
        "examples_exceeding_full_scale": clipped,
        "global_seed": plan.global_seed,
        "epoch": args.epoch,
    });
    let text = serde_json::to_string_pretty(&summary)?;
    std::fs::write(ctx.out_path("summary.json"), &text)?;
    println!("{text}");
    Ok(())
}
