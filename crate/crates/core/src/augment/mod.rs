//! On-the-fly training-example synthesis.
//!
//! One example is produced from a clean speech source and a noise source in a
//! fixed order:
//!
//! 1. random biquad shaping of speech and noise, each with its own filter;
//! 2. active-level measurement of both filtered signals with a threshold VAD;
//! 3. noise scaled to hit the requested active SNR and added to the speech;
//! 4. mixture and clean target scaled by one common gain so the target's
//!    active level lands on the requested dBFS value.
//!
//! Every random choice lives in [`AugmentSpec`], so an example can be rebuilt
//! from its spec and the source audio alone.

mod biquad;
mod vad;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

pub use biquad::{apply_biquad, BiquadCoeffs, COEFF_BOUND};
pub use vad::{active_level, ActiveLevel, VadConfig, DEFAULT_VAD_THRESHOLD_DB};

/// Distribution parameters for augmentation draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub snr_mean_db: f64,
    pub snr_std_db: f64,
    pub level_mean_dbfs: f64,
    pub level_std_db: f64,
    /// Random biquad shaping; identity filters when off.
    pub spectral_shaping: bool,
    /// Random output level; when off every example is scaled to `level_mean_dbfs`.
    pub level_augmentation: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            snr_mean_db: 5.0,
            snr_std_db: 10.0,
            level_mean_dbfs: -28.0,
            level_std_db: 10.0,
            spectral_shaping: true,
            level_augmentation: true,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.snr_mean_db,
            self.snr_std_db,
            self.level_mean_dbfs,
            self.level_std_db,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite || self.snr_std_db < 0.0 || self.level_std_db < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "augmentation distributions must be finite with non-negative spread: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Fully resolved augmentation parameters for one example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub speech_filter: BiquadCoeffs,
    pub noise_filter: BiquadCoeffs,
    pub snr_db: f64,
    pub level_dbfs: f64,
    /// Seed of the stream the draws came from. Informational only.
    pub seed: u64,
    /// Start of the noise excerpt used against the speech.
    #[serde(default)]
    pub noise_offset: usize,
}

impl AugmentSpec {
    /// Spec that leaves both sources unfiltered.
    pub fn plain(snr_db: f64, level_dbfs: f64) -> Self {
        AugmentSpec {
            speech_filter: BiquadCoeffs::IDENTITY,
            noise_filter: BiquadCoeffs::IDENTITY,
            snr_db,
            level_dbfs,
            seed: 0,
            noise_offset: 0,
        }
    }

    /// Draw a spec from a fresh ChaCha8 stream seeded with `seed`.
    pub fn from_seed(seed: u64, config: &AugmentConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AugmentSpec {
            seed,
            ..sample_augment_spec(&mut rng, config)
        }
    }
}

/// Draw filters, SNR and level. All eight filter coefficients and both
/// Gaussian variates are always consumed from `rng`, whatever the on/off
/// switches, so toggling one augmentation leaves the other draws unchanged.
pub fn sample_augment_spec<R: Rng + ?Sized>(rng: &mut R, config: &AugmentConfig) -> AugmentSpec {
    let speech_filter = BiquadCoeffs::sample(rng);
    let noise_filter = BiquadCoeffs::sample(rng);
    let z_snr: f64 = rng.sample(rand_distr::StandardNormal);
    let z_level: f64 = rng.sample(rand_distr::StandardNormal);
    let (speech_filter, noise_filter) = if config.spectral_shaping {
        (speech_filter, noise_filter)
    } else {
        (BiquadCoeffs::IDENTITY, BiquadCoeffs::IDENTITY)
    };
    let level_dbfs = if config.level_augmentation {
        config.level_mean_dbfs + config.level_std_db * z_level
    } else {
        config.level_mean_dbfs
    };
    AugmentSpec {
        speech_filter,
        noise_filter,
        snr_db: config.snr_mean_db + config.snr_std_db * z_snr,
        level_dbfs,
        seed: 0,
        noise_offset: 0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mix {
    pub mixture: Waveform,
    /// Gain applied to the noise before adding it.
    pub noise_gain: f64,
    pub speech_level: ActiveLevel,
    pub noise_level: ActiveLevel,
}

/// Add `noise` to `speech` at the requested active SNR. Only the first
/// `speech.len()` noise samples are used.
pub fn mix_at_snr(speech: &Waveform, noise: &Waveform, snr_db: f64, vad: &VadConfig) -> Result<Mix> {
    if noise.len() < speech.len() {
        return Err(Error::NoiseTooShort {
            noise: noise.len(),
            speech: speech.len(),
            offset: 0,
        });
    }
    check_same_rate(speech, noise)?;
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig(format!("SNR must be finite, got {snr_db}")));
    }
    let noise = if noise.len() == speech.len() {
        noise.clone()
    } else {
        noise.slice(0, speech.len())
    };
    let speech_level = active_level(speech, vad)?;
    let noise_level = active_level(&noise, vad)?;
    let noise_gain = speech_level.sigma / noise_level.sigma * 10f64.powf(-snr_db / 20.0);
    let mixture = speech
        .samples()
        .iter()
        .zip(noise.samples())
        .map(|(s, n)| s + noise_gain * n)
        .collect();
    Ok(Mix {
        mixture: Waveform::new(mixture, speech.sample_rate_hz())?,
        noise_gain,
        speech_level,
        noise_level,
    })
}

/// Scale mixture and target by the one gain that puts the target's active
/// level at `level_dbfs`. Returns `(mixture', target', gain)`.
pub fn scale_to_level(
    mix: &Waveform,
    target: &Waveform,
    level_dbfs: f64,
    vad: &VadConfig,
) -> Result<(Waveform, Waveform, f64)> {
    if mix.len() != target.len() {
        return Err(Error::shape(
            format!("{} samples", target.len()),
            format!("{} samples", mix.len()),
        ));
    }
    if !level_dbfs.is_finite() {
        return Err(Error::InvalidConfig(format!("level must be finite, got {level_dbfs}")));
    }
    let sigma = active_level(target, vad)?.sigma;
    let gain = 10f64.powf(level_dbfs / 20.0) / sigma;
    Ok((mix.scaled(gain), target.scaled(gain), gain))
}

/// One synthesized training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedExample {
    pub mixture: Waveform,
    /// Clean speech, filtered and scaled exactly like its share of `mixture`.
    pub target: Waveform,
    /// Filtered, SNR-scaled and level-scaled noise component.
    pub noise: Waveform,
    pub spec: AugmentSpec,
    /// Active level (linear standard deviation) of `target`.
    pub sigma_s: f64,
    /// Samples of `mixture` with magnitude above full scale. Nothing is clipped.
    pub clipped_samples: usize,
}

/// Run the full augmentation chain for one (speech, noise) pair.
pub fn synthesize_example(
    speech: &Waveform,
    noise: &Waveform,
    spec: &AugmentSpec,
    vad: &VadConfig,
) -> Result<MixedExample> {
    check_same_rate(speech, noise)?;
    let offset = spec.noise_offset;
    if noise.len() < offset || noise.len() - offset < speech.len() {
        return Err(Error::NoiseTooShort {
            noise: noise.len(),
            speech: speech.len(),
            offset,
        });
    }
    let noise = noise.slice(offset, speech.len());

    let speech_f = apply_biquad(speech, &spec.speech_filter)?;
    let noise_f = apply_biquad(&noise, &spec.noise_filter)?;

    let mix = mix_at_snr(&speech_f, &noise_f, spec.snr_db, vad)?;
    let (mixture, target, level_gain) = scale_to_level(&mix.mixture, &speech_f, spec.level_dbfs, vad)?;
    let noise = noise_f.scaled(mix.noise_gain * level_gain);
    let sigma_s = active_level(&target, vad)?.sigma;
    let clipped_samples = mixture.samples().iter().filter(|s| s.abs() > 1.0).count();
    Ok(MixedExample {
        mixture,
        target,
        noise,
        spec: *spec,
        sigma_s,
        clipped_samples,
    })
}

fn check_same_rate(a: &Waveform, b: &Waveform) -> Result<()> {
    if a.sample_rate_hz() != b.sample_rate_hz() {
        return Err(Error::UnsupportedSampleRate {
            found: b.sample_rate_hz(),
            expected: a.sample_rate_hz(),
        });
    }
    Ok(())
}

/// Active SNR in dB between two component signals.
pub fn measured_snr_db(speech: &Waveform, noise: &Waveform, vad: &VadConfig) -> Result<f64> {
    let s = active_level(speech, vad)?.sigma;
    let n = active_level(noise, vad)?.sigma;
    Ok(20.0 * (s / n).log10())
}
