use serde::{Deserialize, Serialize};

use crate::dsp::{frame_rms, FrameConfig, Waveform};
use crate::error::{Error, Result};

pub const DEFAULT_VAD_THRESHOLD_DB: f64 = -40.0;

/// Frame-energy voice activity detector: a frame is active when its RMS is
/// within `threshold_db` of the loudest frame in the utterance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadConfig {
    pub threshold_db: f64,
    pub frame: FrameConfig,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            threshold_db: DEFAULT_VAD_THRESHOLD_DB,
            frame: FrameConfig::default(),
        }
    }
}

impl VadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_db < 0.0) {
            return Err(Error::InvalidConfig(format!(
                "VAD threshold must be negative, got {} dB",
                self.threshold_db
            )));
        }
        self.frame.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveLevel {
    /// Standard deviation of all samples covered by an active frame.
    pub sigma: f64,
    /// Per-frame activity decision.
    pub active: Vec<bool>,
}

impl ActiveLevel {
    pub fn dbfs(&self) -> f64 {
        20.0 * self.sigma.log10()
    }

    pub fn active_fraction(&self) -> f64 {
        self.active.iter().filter(|&&a| a).count() as f64 / self.active.len() as f64
    }
}

/// Active level of `w`: the standard deviation over the samples of all frames
/// whose RMS exceeds the peak frame RMS lowered by the VAD threshold.
pub fn active_level(w: &Waveform, vad: &VadConfig) -> Result<ActiveLevel> {
    vad.validate()?;
    let rms = frame_rms(w, &vad.frame)?;
    let peak = rms.iter().copied().fold(0.0_f64, f64::max);
    if peak <= 0.0 {
        return Err(Error::NoActiveFrames);
    }
    let floor = peak * 10f64.powf(vad.threshold_db / 20.0);
    let active: Vec<bool> = rms.iter().map(|&r| r > floor).collect();

    // Frames overlap; each sample is counted once.
    let x = w.samples();
    let mut covered = vec![false; x.len()];
    for (n, _) in active.iter().enumerate().filter(|(_, &a)| a) {
        let start = n * vad.frame.hop;
        covered[start..start + vad.frame.window_len].fill(true);
    }
    let (mut count, mut sum) = (0usize, 0.0);
    for (s, _) in x.iter().zip(&covered).filter(|(_, &c)| c) {
        count += 1;
        sum += s;
    }
    let mean = sum / count as f64;
    let var = x
        .iter()
        .zip(&covered)
        .filter(|(_, &c)| c)
        .map(|(s, _)| (s - mean).powi(2))
        .sum::<f64>()
        / count as f64;
    let sigma = var.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::NoActiveFrames);
    }
    Ok(ActiveLevel { sigma, active })
}
