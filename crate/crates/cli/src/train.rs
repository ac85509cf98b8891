use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use speechaug::corpus::Manifest;
use speechaug::enhance::{run_toy_experiment, synthetic_split, ExperimentRun, LossMode, ToyExperiment};
use speechaug::Waveform;

use crate::{write_csv, Ctx};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum, default_value_t = Loss::Normalized)]
    loss: Loss,

    /// Random level augmentation of training mixtures.
    #[arg(long, value_enum, default_value_t = Switch::On)]
    level_aug: Switch,

    #[arg(long)]
    epochs: Option<usize>,

    /// Step size of the normalized loss (the standard loss is rescaled to match).
    #[arg(long)]
    lr: Option<f64>,

    /// Train all four loss / level-augmentation combinations.
    #[arg(long)]
    compare: bool,

    /// Speech manifest; every fifth entry is held out for validation.
    #[arg(long, requires = "noise")]
    speech: Option<PathBuf>,

    /// Noise manifest; every fifth entry is held out for validation.
    #[arg(long, requires = "speech")]
    noise: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Loss {
    Standard,
    Normalized,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Switch {
    On,
    Off,
}

struct Split {
    train_speech: Vec<Waveform>,
    train_noise: Vec<Waveform>,
    val_speech: Vec<Waveform>,
    val_noise: Vec<Waveform>,
}

fn split_manifest(path: &PathBuf) -> Result<(Vec<Waveform>, Vec<Waveform>)> {
    let m = Manifest::load(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let audio = m.load_audio().with_context(|| format!("decoding files of {}", path.display()))?;
    let (val, train): (Vec<_>, Vec<_>) = audio.into_iter().enumerate().partition(|(i, _)| i % 5 == 4);
    if train.is_empty() || val.is_empty() {
        bail!("{} needs at least 5 entries to hold out a validation file", path.display());
    }
    Ok((
        train.into_iter().map(|(_, w)| w).collect(),
        val.into_iter().map(|(_, w)| w).collect(),
    ))
}

fn load_split(args: &Args, seed: u64) -> Result<Split> {
    match (&args.speech, &args.noise) {
        (Some(s), Some(n)) => {
            let (train_speech, val_speech) = split_manifest(s)?;
            let (train_noise, val_noise) = split_manifest(n)?;
            Ok(Split {
                train_speech,
                train_noise,
                val_speech,
                val_noise,
            })
        }
        _ => {
            let (train, val) = synthetic_split(seed)?;
            Ok(Split {
                train_speech: train.speech,
                train_noise: train.noise,
                val_speech: val.speech,
                val_noise: val.noise,
            })
        }
    }
}

fn label(run: &ExperimentRun) -> String {
    format!(
        "{}_{}",
        run.mode.as_str(),
        if run.level_augmentation { "levelaug" } else { "nolevelaug" }
    )
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let mut exp: ToyExperiment = ctx.config.toy_experiment();
    if let Some(e) = args.epochs {
        exp.epochs = e;
    }
    if let Some(lr) = args.lr {
        if !(lr > 0.0 && lr.is_finite()) {
            bail!("--lr must be positive, got {lr}");
        }
        exp.learning_rate = lr;
    }
    let split = load_split(&args, exp.seed)?;

    let configs: Vec<(LossMode, bool)> = if args.compare {
        vec![
            (LossMode::Standard, false),
            (LossMode::Standard, true),
            (LossMode::Normalized, false),
            (LossMode::Normalized, true),
        ]
    } else {
        let mode = match args.loss {
            Loss::Standard => LossMode::Standard,
            Loss::Normalized => LossMode::Normalized,
        };
        vec![(mode, matches!(args.level_aug, Switch::On))]
    };

    let mut runs = Vec::new();
    for (mode, level_aug) in configs {
        let mut e = exp;
        e.augment.level_augmentation = level_aug;
        log::info!("training {} loss, level augmentation {}", mode.as_str(), level_aug);
        let run = run_toy_experiment(
            &split.train_speech,
            &split.train_noise,
            &split.val_speech,
            &split.val_noise,
            &e,
            mode,
            ctx.exec,
        )?;
        log::info!(
            "{}: val SI-SDR {:.3} dB -> {:.3} dB",
            label(&run),
            run.initial_val_si_sdr,
            run.final_val_si_sdr()
        );
        runs.push(run);
    }

    for run in &runs {
        let name = if args.compare {
            format!("checkpoint_{}.json", label(run))
        } else {
            "checkpoint.json".to_string()
        };
        let path = ctx.out_path(name);
        let f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        run.model.write_json(std::io::BufWriter::new(f))?;
    }
    if let [run] = runs.as_slice() {
        write_csv(
            &ctx.out_path("trace.csv"),
            "epoch,loss,val_si_sdr",
            std::iter::once(format!("0,,{:.6}", run.initial_val_si_sdr))
                .chain(run.trace.iter().map(|t| format!("{},{:.9e},{:.6}", t.epoch, t.loss, t.val_si_sdr))),
        )?;
    }
    let mut rows = Vec::new();
    for run in &runs {
        let cfg = label(run);
        let (loss, aug) = (run.mode.as_str(), if run.level_augmentation { "on" } else { "off" });
        rows.push(format!("{cfg},{loss},{aug},0,{:.6}", run.initial_val_si_sdr));
        rows.extend(
            run.trace
                .iter()
                .map(|t| format!("{cfg},{loss},{aug},{},{:.6}", t.epoch, t.val_si_sdr)),
        );
    }
    write_csv(
        &ctx.out_path("comparison.csv"),
        "config,loss,level_aug,epoch,val_si_sdr",
        rows,
    )?;

    let summary: Vec<_> = runs
        .iter()
        .map(|r| {
            serde_json::json!({
                "config": label(r),
                "learning_rate": r.learning_rate,
                "initial_val_si_sdr": r.initial_val_si_sdr,
                "final_val_si_sdr": r.final_val_si_sdr(),
            })
        })
        .collect();
    let text = serde_json::to_string_pretty(&serde_json::json!({ "seed": exp.seed, "runs": summary }))?;
    std::fs::write(ctx.out_path("train_summary.json"), &text)?;
    println!("{text}");
    Ok(())
}
