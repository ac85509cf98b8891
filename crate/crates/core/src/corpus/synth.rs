//! Deterministic synthetic test signals.
//!
//! The speech-like signal is a sequence of voiced "syllables" (a harmonic
//! complex with a gliding pitch, shaped by random vowel-like resonances and a
//! raised-cosine envelope) separated by pauses. Pauses hold a faint noise
//! floor far below the VAD threshold, so the detector always sees inactive
//! frames.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{Waveform, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};

pub const MIN_DURATION_S: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SignalKind {
    SpeechLike,
    White,
    Pink,
    /// Pure tone at `freq_hz`, amplitude 0.5.
    Tone { freq_hz: f64 },
}

impl std::str::FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "speech-like" | "speech" => Ok(SignalKind::SpeechLike),
            "white" => Ok(SignalKind::White),
            "pink" => Ok(SignalKind::Pink),
            "tone" => Ok(SignalKind::Tone { freq_hz: 1000.0 }),
            other => match other.strip_prefix("tone:") {
                Some(f) => f
                    .parse()
                    .map(|freq_hz| SignalKind::Tone { freq_hz })
                    .map_err(|_| Error::InvalidConfig(format!("bad tone frequency {f:?}"))),
                None => Err(Error::InvalidConfig(format!("unknown signal kind {other:?}"))),
            },
        }
    }
}

/// Generate `duration_s` seconds of the requested signal at 16 kHz.
pub fn synth_test_signal(kind: SignalKind, duration_s: f64, seed: u64) -> Result<Waveform> {
    if !(duration_s >= MIN_DURATION_S) || !duration_s.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "duration must be at least {MIN_DURATION_S} s, got {duration_s}"
        )));
    }
    let sr = DEFAULT_SAMPLE_RATE;
    let len = (duration_s * sr as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = match kind {
        SignalKind::White => gaussian(&mut rng, len, 0.1),
        SignalKind::Pink => pink(&mut rng, len, sr as f64),
        SignalKind::Tone { freq_hz } => (0..len)
            .map(|t| 0.5 * (2.0 * PI * freq_hz * t as f64 / sr as f64).sin())
            .collect(),
        SignalKind::SpeechLike => speech_like(&mut rng, len, sr as f64),
    };
    Waveform::new(samples, sr)
}

fn gaussian(rng: &mut ChaCha8Rng, len: usize, std: f64) -> Vec<f64> {
    (0..len)
        .map(|_| { let z: f64 = StandardNormal.sample(rng); std * z })
        .collect()
}

/// Corner of the high-pass applied to pink noise.
pub const PINK_HIGHPASS_HZ: f64 = 60.0;

/// Kellett's refined pink filter on white Gaussian noise, high-passed at
/// [`PINK_HIGHPASS_HZ`] and scaled to std 0.1.
fn pink(rng: &mut ChaCha8Rng, len: usize, sr: f64) -> Vec<f64> {
    let mut b = [0.0f64; 7];
    let mut out: Vec<f64> = (0..len)
        .map(|_| {
            let w: f64 = StandardNormal.sample(rng);
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let y = b.iter().sum::<f64>() + w * 0.5362;
            b[6] = w * 0.115926;
            y
        })
        .collect();
    butterworth_highpass(&mut out, PINK_HIGHPASS_HZ, sr);
    let mean = out.iter().sum::<f64>() / len as f64;
    let std = (out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len as f64).sqrt();
    out.iter_mut().for_each(|v| *v = 0.1 * (*v - mean) / std);
    out
}

/// Second-order Butterworth high-pass (bilinear transform), in place.
fn butterworth_highpass(x: &mut [f64], fc: f64, sr: f64) {
    let k = (PI * fc / sr).tan();
    let q = std::f64::consts::FRAC_1_SQRT_2;
    let norm = 1.0 / (1.0 + k / q + k * k);
    let (b0, b1, b2) = (norm, -2.0 * norm, norm);
    let (a1, a2) = (2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm);
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    for v in x.iter_mut() {
        let y = b0 * *v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        (x2, x1, y2, y1) = (x1, *v, y1, y);
        *v = y;
    }
}

fn speech_like(rng: &mut ChaCha8Rng, len: usize, sr: f64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    // Leading pause, then alternate syllable runs and pauses.
    let mut t = (rng.random_range(0.1..0.2) * sr) as usize;
    let mut voiced = true;
    while t < len {
        if voiced {
            let run = (rng.random_range(0.35..0.8) * sr) as usize;
            let end = (t + run).min(len);
            let mut pos = t;
            while pos < end {
                let syl = ((rng.random_range(0.12..0.25) * sr) as usize).min(end - pos);
                syllable(rng, &mut out[pos..pos + syl], sr);
                pos += syl;
            }
            t = end;
        } else {
            t += (rng.random_range(0.18..0.35) * sr) as usize;
        }
        voiced = !voiced;
    }
    // Faint floor everywhere, roughly 70 dB under the syllable peaks.
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += 1e-4 * z;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    out.iter_mut().for_each(|v| *v *= 0.5 / peak);
    out
}

fn syllable(rng: &mut ChaCha8Rng, out: &mut [f64], sr: f64) {
    let n = out.len();
    if n < 16 {
        return;
    }
    let f0_start = rng.random_range(90.0..240.0);
    let f0_end = f0_start * rng.random_range(0.8..1.25);
    let formants = [
        (rng.random_range(300.0..900.0), 80.0),
        (rng.random_range(900.0..2300.0), 120.0),
        (rng.random_range(2300.0..3500.0), 200.0),
    ];
    let gain = rng.random_range(0.4..1.0);
    let aspiration = rng.random_range(0.0..0.05);
    let mut phase = 0.0;
    for (i, o) in out.iter_mut().enumerate() {
        let frac = i as f64 / n as f64;
        let f0 = f0_start + (f0_end - f0_start) * frac;
        phase += 2.0 * PI * f0 / sr;
        let env = 0.5 - 0.5 * (2.0 * PI * frac).cos();
        let mut v = 0.0;
        let mut h = 1;
        while (h as f64) * f0 < 4000.0 {
            let f = h as f64 * f0;
            let amp: f64 = formants
                .iter()
                .map(|&(fc, bw)| 1.0 / (1.0 + ((f - fc) / bw).powi(2)))
                .sum::<f64>()
                / h as f64;
            v += amp * (h as f64 * phase).sin();
            h += 1;
        }
        let noise: f64 = StandardNormal.sample(rng);
        *o += gain * env * (v + aspiration * noise);
    }
}

/// In-memory speech and noise pools for desk-scale experiments.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub speech: Vec<Waveform>,
    pub noise: Vec<Waveform>,
}

impl SyntheticCorpus {
    /// `n_speech` speech-like utterances of `duration_s` and `n_noise` noise
    /// recordings of twice that length (white and pink, alternating).
    pub fn generate(n_speech: usize, n_noise: usize, duration_s: f64, seed: u64) -> Result<Self> {
        let speech = (0..n_speech)
            .map(|i| synth_test_signal(SignalKind::SpeechLike, duration_s, seed.wrapping_add(i as u64)))
            .collect::<Result<_>>()?;
        let noise = (0..n_noise)
            .map(|i| {
                let kind = if i % 2 == 0 { SignalKind::Pink } else { SignalKind::White };
                synth_test_signal(kind, 2.0 * duration_s, seed.wrapping_add(1_000_003 + i as u64))
            })
            .collect::<Result<_>>()?;
        Ok(SyntheticCorpus { speech, noise })
    }
}
