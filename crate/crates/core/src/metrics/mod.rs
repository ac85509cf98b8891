//! Objective quality metrics: SI-SDR, segmental SNR, frequency-weighted
//! segmental SNR and LPC cepstral distance.
//!
//! All functions take `(reference, estimate)` in that order.

mod cepstral;
mod fwseg;

use serde::{Deserialize, Serialize};

use crate::dsp::{FrameConfig, Waveform};
use crate::error::{Error, Result};

pub use cepstral::{cepstral_distance, cepstral_distance_active, lpc, lpc_cepstrum, CepstralDistance};
pub use fwseg::{fw_seg_snr, mel_filterbank, FwSegConfig};

/// Upper bound reported by [`si_sdr`] for a perfect estimate. The lower bound
/// is its negative.
pub const SI_SDR_CAP_DB: f64 = 100.0;

pub const SEG_SNR_MIN_DB: f64 = -10.0;
pub const SEG_SNR_MAX_DB: f64 = 35.0;

fn check_pair(reference: &Waveform, estimate: &Waveform) -> Result<()> {
    if reference.len() != estimate.len() {
        return Err(Error::shape(
            format!("{} samples", reference.len()),
            format!("{} samples", estimate.len()),
        ));
    }
    if reference.samples().iter().all(|&s| s == 0.0) {
        return Err(Error::ZeroReference);
    }
    Ok(())
}

/// Scale-invariant SDR in dB, clamped to `[-100, 100]`.
pub fn si_sdr(reference: &Waveform, estimate: &Waveform) -> Result<f64> {
    check_pair(reference, estimate)?;
    let s = reference.samples();
    let e = estimate.samples();
    let ref_energy: f64 = s.iter().map(|v| v * v).sum();
    let dot: f64 = s.iter().zip(e).map(|(a, b)| a * b).sum();
    let alpha = dot / ref_energy;
    let (mut target, mut residual) = (0.0, 0.0);
    for (a, b) in s.iter().zip(e) {
        let t = alpha * a;
        target += t * t;
        residual += (b - t).powi(2);
    }
    let db = if target == 0.0 {
        -SI_SDR_CAP_DB
    } else if residual == 0.0 {
        SI_SDR_CAP_DB
    } else {
        10.0 * (target / residual).log10()
    };
    Ok(db.clamp(-SI_SDR_CAP_DB, SI_SDR_CAP_DB))
}

fn clamp_snr(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        SEG_SNR_MAX_DB
    } else if signal == 0.0 {
        SEG_SNR_MIN_DB
    } else {
        (10.0 * (signal / noise).log10()).clamp(SEG_SNR_MIN_DB, SEG_SNR_MAX_DB)
    }
}

/// Mean over frames of the clamped per-frame SNR of the raw samples.
///
/// Only `window_len` and `hop` of `frame` are used, so non-overlapping
/// segments (`hop == window_len`) are allowed here.
pub fn seg_snr(reference: &Waveform, estimate: &Waveform, frame: &FrameConfig) -> Result<f64> {
    check_pair(reference, estimate)?;
    if frame.hop == 0 || frame.window_len == 0 {
        return Err(Error::InvalidConfig("segment length and hop must be positive".into()));
    }
    let frames = frame.num_frames(reference.len())?;
    let s = reference.samples();
    let e = estimate.samples();
    let total: f64 = (0..frames)
        .map(|n| {
            let r = n * frame.hop..n * frame.hop + frame.window_len;
            let sig: f64 = s[r.clone()].iter().map(|v| v * v).sum();
            let err: f64 = s[r.clone()].iter().zip(&e[r]).map(|(a, b)| (a - b).powi(2)).sum();
            clamp_snr(sig, err)
        })
        .sum();
    Ok(total / frames as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub frame: FrameConfig,
    pub fw_seg: FwSegConfig,
    pub lpc_order: usize,
    /// Average the cepstral distance over speech-active reference frames only.
    pub cd_active_frames_only: bool,
    /// VAD threshold for that selection, relative to the loudest frame.
    pub cd_vad_threshold_db: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            frame: FrameConfig::default(),
            fw_seg: FwSegConfig::default(),
            lpc_order: 10,
            cd_active_frames_only: true,
            cd_vad_threshold_db: crate::augment::DEFAULT_VAD_THRESHOLD_DB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub si_sdr_db: f64,
    pub fw_seg_snr_db: f64,
    pub cepstral_distance: f64,
    pub seg_snr_db: f64,
}

/// All metrics for one (reference, estimate) pair.
pub fn evaluate(reference: &Waveform, estimate: &Waveform, cfg: &MetricConfig) -> Result<MetricReport> {
    Ok(MetricReport {
        si_sdr_db: si_sdr(reference, estimate)?,
        fw_seg_snr_db: fw_seg_snr(reference, estimate, &cfg.frame, &cfg.fw_seg)?,
        cepstral_distance: if cfg.cd_active_frames_only {
            cepstral_distance_active(reference, estimate, &cfg.frame, cfg.lpc_order, cfg.cd_vad_threshold_db)?.mean
        } else {
            cepstral_distance(reference, estimate, &cfg.frame, cfg.lpc_order)?.mean
        },
        seg_snr_db: seg_snr(reference, estimate, &cfg.frame)?,
    })
}
