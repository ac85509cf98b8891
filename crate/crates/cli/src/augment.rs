use std::path::PathBuf;

use anyhow::{Context, Result};
use speechaug::augment::{active_level, apply_biquad, synthesize_example, AugmentSpec};
use speechaug::corpus::{read_wav, write_wav, WavEncoding};

use crate::Ctx;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Speech WAV to augment.
    #[arg(long)]
    input: PathBuf,

    /// JSON file with the augmentation spec (filters, SNR, level, noise offset).
    #[arg(long)]
    spec: PathBuf,

    /// Noise WAV; when given, the full mixture is written as well.
    #[arg(long)]
    noise: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let spec: AugmentSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let speech = read_wav(&args.input)?;
    let vad = ctx.config.vad();
    let stem = args
        .input
        .file_stem()
        .map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
    let out = |suffix: &str| ctx.out_path(format!("{stem}_{suffix}.wav"));

    let filtered = apply_biquad(&speech, &spec.speech_filter)?;
    write_wav(out("filtered"), &filtered, WavEncoding::Float32)?;
    let sigma = active_level(&filtered, &vad)?.sigma;
    let leveled = filtered.scaled(10f64.powf(spec.level_dbfs / 20.0) / sigma);
    write_wav(out("leveled"), &leveled, WavEncoding::Float32)?;

    let mut summary = serde_json::json!({
        "filtered": out("filtered"),
        "leveled": out("leveled"),
        "speech_active_dbfs": 20.0 * sigma.log10(),
        "level_dbfs": spec.level_dbfs,
    });
    if let Some(noise_path) = &args.noise {
        let noise = read_wav(noise_path)?;
        let ex = synthesize_example(&speech, &noise, &spec, &vad)?;
        write_wav(out("mixture"), &ex.mixture, WavEncoding::Float32)?;
        write_wav(out("target"), &ex.target, WavEncoding::Float32)?;
        write_wav(out("noise"), &ex.noise, WavEncoding::Float32)?;
        summary["mixture"] = serde_json::json!(out("mixture"));
        summary["snr_db"] = serde_json::json!(spec.snr_db);
        summary["clipped_samples"] = serde_json::json!(ex.clipped_samples);
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
