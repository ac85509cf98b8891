use serde::{Deserialize, Serialize};

use super::{check_pair, clamp_snr, SEG_SNR_MAX_DB, SEG_SNR_MIN_DB};
use crate::dsp::{stft, FrameConfig, Waveform};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FwSegConfig {
    pub num_bands: usize,
    /// Exponent applied to the reference band magnitude to form the weight.
    pub gamma: f64,
    pub min_db: f64,
    pub max_db: f64,
}

impl Default for FwSegConfig {
    fn default() -> Self {
        FwSegConfig {
            num_bands: 25,
            gamma: 0.2,
            min_db: SEG_SNR_MIN_DB,
            max_db: SEG_SNR_MAX_DB,
        }
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale between 0 Hz and
/// Nyquist, one row of `frame.num_bins()` weights per band.
pub fn mel_filterbank(frame: &FrameConfig, num_bands: usize) -> Vec<Vec<f64>> {
    let nyquist = frame.sample_rate_hz as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..num_bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (num_bands + 1) as f64))
        .collect();
    let bin_hz = frame.sample_rate_hz as f64 / frame.fft_size as f64;
    (0..num_bands)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..frame.num_bins())
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Frequency-weighted segmental SNR.
///
/// Per frame and band, the SNR compares the reference band magnitude `E` with
/// the estimate band magnitude `E'` as `10 log10(E^2 / (E - E')^2)`, clamped
/// to `[min_db, max_db]`. Bands are averaged with weights `E^gamma`; frames
/// whose reference is silent carry no weight and are skipped.
pub fn fw_seg_snr(
    reference: &Waveform,
    estimate: &Waveform,
    frame: &FrameConfig,
    cfg: &FwSegConfig,
) -> Result<f64> {
    check_pair(reference, estimate)?;
    let s = stft(reference, frame)?;
    let e = stft(estimate, frame)?;
    let bank = mel_filterbank(frame, cfg.num_bands);
    let band = |spec: &[num_complex::Complex64], w: &[f64]| -> f64 {
        spec.iter().zip(w).map(|(c, w)| c.norm() * w).sum()
    };
    let (mut total, mut used) = (0.0, 0usize);
    for n in 0..s.num_frames() {
        let (mut num, mut den) = (0.0, 0.0);
        for w in &bank {
            let clean = band(s.frame(n), w);
            let proc = band(e.frame(n), w);
            let weight = clean.powf(cfg.gamma);
            if weight == 0.0 {
                continue;
            }
            let snr = clamp_snr(clean * clean, (clean - proc).powi(2)).clamp(cfg.min_db, cfg.max_db);
            num += weight * snr;
            den += weight;
        }
        if den > 0.0 {
            total += num / den;
            used += 1;
        }
    }
    if used == 0 {
        return Err(crate::error::Error::ZeroReference);
    }
    Ok(total / used as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(len: usize, seed: u64, std: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); std * z }).collect::<Vec<f64>>()
    }

    #[test]
    fn filterbank_covers_spectrum() {
        let f = FrameConfig::default();
        let bank = mel_filterbank(&f, 25);
        assert_eq!(bank.len(), 25);
        for row in &bank {
            assert!(row.iter().any(|&w| w > 0.0));
            assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
        }
    }

    #[test]
    fn identical_signals_hit_ceiling() {
        let f = FrameConfig::default();
        let s = Waveform::new(white(8000, 1, 0.1), 16_000).unwrap();
        assert_eq!(fw_seg_snr(&s, &s, &f, &FwSegConfig::default()).unwrap(), 35.0);
    }

    #[test]
    fn uniform_twenty_db_perturbation() {
        // E' = 1.1 E in every band: (E - E')^2 = 0.01 E^2.
        let f = FrameConfig::default();
        let x = white(16_000, 2, 0.1);
        let s = Waveform::new(x.clone(), 16_000).unwrap();
        let est = Waveform::new(x.iter().map(|v| v * 1.1).collect(), 16_000).unwrap();
        let v = fw_seg_snr(&s, &est, &f, &FwSegConfig::default()).unwrap();
        assert!((v - 20.0).abs() < 0.5, "{v}");
    }

    #[test]
    fn decreases_with_contamination() {
        let f = FrameConfig::default();
        let x = white(16_000, 3, 0.1);
        let n = white(16_000, 4, 0.1);
        let s = Waveform::new(x.clone(), 16_000).unwrap();
        let mut last = f64::INFINITY;
        for level in [0.01, 0.03, 0.1, 0.3, 1.0] {
            let est = Waveform::new(x.iter().zip(&n).map(|(a, b)| a + level * b).collect(), 16_000).unwrap();
            let v = fw_seg_snr(&s, &est, &f, &FwSegConfig::default()).unwrap();
            assert!(v < last, "{level}: {v} !< {last}");
            assert!((SEG_SNR_MIN_DB..=SEG_SNR_MAX_DB).contains(&v));
            last = v;
        }
    }
}
