use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use speechaug::corpus::read_wav;
use speechaug::{evaluate, MetricConfig, MetricReport};

use crate::{write_csv, Ctx};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of clean reference WAV files.
    #[arg(long)]
    reference: PathBuf,

    /// Directory of estimates; files are matched to references by name.
    #[arg(long)]
    estimate: PathBuf,

    /// Label written to the `condition` column.
    #[arg(long, default_value = "estimate")]
    condition: String,

    /// CSV file name inside the output directory.
    #[arg(long, default_value = "metrics.csv")]
    output: String,
}

fn wav_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let is_wav = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if is_wav {
            if let Some(stem) = path.file_stem() {
                out.insert(stem.to_string_lossy().into_owned(), path);
            }
        }
    }
    Ok(out)
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let refs = wav_files(&args.reference)?;
    let ests = wav_files(&args.estimate)?;
    let pairs: Vec<(String, PathBuf, PathBuf)> = refs
        .iter()
        .filter_map(|(id, r)| match ests.get(id) {
            Some(e) => Some((id.clone(), r.clone(), e.clone())),
            None => {
                log::warn!("no estimate for reference {id}");
                None
            }
        })
        .collect();
    if pairs.is_empty() {
        bail!(
            "no reference/estimate pairs with matching names in {} and {}",
            args.reference.display(),
            args.estimate.display()
        );
    }
    let cfg = MetricConfig::default();
    let results = ctx.exec.map(&pairs, |(id, r, e)| -> Result<(String, MetricReport)> {
        let reference = read_wav(r)?;
        let estimate = read_wav(e)?;
        let report = evaluate(&reference, &estimate, &cfg).with_context(|| format!("scoring {id}"))?;
        Ok((id.clone(), report))
    });
    let mut rows = Vec::new();
    let mut failed = 0usize;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                failed += 1;
                log::warn!("{e:#}");
            }
        }
    }
    if rows.is_empty() {
        bail!("every pair failed to score");
    }
    let path = ctx.out_path(&args.output);
    write_csv(
        &path,
        "utterance_id,condition,si_sdr,fw_seg_snr,cd,seg_snr",
        rows.iter().map(|(id, m)| {
            format!(
                "{id},{},{:.6},{:.6},{:.6},{:.6}",
                args.condition, m.si_sdr_db, m.fw_seg_snr_db, m.cepstral_distance, m.seg_snr_db
            )
        }),
    )?;
    let n = rows.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| rows.iter().map(|(_, m)| f(m)).sum::<f64>() / n;
    let summary = serde_json::json!({
        "csv": path,
        "scored": rows.len(),
        "failed": failed,
        "mean_si_sdr": mean(|m| m.si_sdr_db),
        "mean_fw_seg_snr": mean(|m| m.fw_seg_snr_db),
        "mean_cd": mean(|m| m.cepstral_distance),
        "mean_seg_snr": mean(|m| m.seg_snr_db),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
