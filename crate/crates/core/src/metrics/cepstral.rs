use std::f64::consts::LN_10;

use super::check_pair;
use crate::augment::{active_level, VadConfig};
use crate::dsp::{FrameConfig, Waveform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CepstralDistance {
    /// Mean per-frame distance over the frames that produced a stable LPC fit.
    pub mean: f64,
    pub frames_used: usize,
    /// Frames dropped because either signal was silent or its LPC fit unstable.
    pub frames_skipped: usize,
    /// Frames left out because the reference was not speech-active there.
    pub frames_inactive: usize,
}

/// Levinson-Durbin on a windowed frame. Returns `a[1..=order]` of
/// `A(z) = 1 + sum a_k z^-k`, or `None` when the frame is silent or a
/// reflection coefficient reaches the unit circle.
pub fn lpc(frame: &[f64], order: usize) -> Option<Vec<f64>> {
    let r: Vec<f64> = (0..=order)
        .map(|lag| frame.iter().zip(&frame[lag.min(frame.len())..]).map(|(a, b)| a * b).sum())
        .collect();
    if !(r[0] > 0.0) {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        if !(k.abs() < 1.0) {
            return None;
        }
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return None;
        }
    }
    Some(a[1..].to_vec())
}

/// Cepstrum `c[1..=p]` of the all-pole model `1 / A(z)`; `c0` (gain) excluded.
pub fn lpc_cepstrum(a: &[f64]) -> Vec<f64> {
    let p = a.len();
    let mut c = vec![0.0; p];
    for n in 1..=p {
        let mut v = -a[n - 1];
        for k in 1..n {
            v -= (k as f64 / n as f64) * c[k - 1] * a[n - k - 1];
        }
        c[n - 1] = v;
    }
    c
}

/// Mean LPC cepstral distance in dB, `10 / ln 10 * sqrt(2 sum (c - c')^2)` per
/// frame, over every frame. Frames are Hann-windowed with the STFT framing.
pub fn cepstral_distance(
    reference: &Waveform,
    estimate: &Waveform,
    frame: &FrameConfig,
    order: usize,
) -> Result<CepstralDistance> {
    check_pair(reference, estimate)?;
    let frames = frame.num_frames(reference.len())?;
    distance_over(reference, estimate, frame, order, &vec![true; frames])
}

/// [`cepstral_distance`] restricted to the frames where the reference is
/// speech-active, i.e. within `threshold_db` of its loudest frame.
pub fn cepstral_distance_active(
    reference: &Waveform,
    estimate: &Waveform,
    frame: &FrameConfig,
    order: usize,
    threshold_db: f64,
) -> Result<CepstralDistance> {
    check_pair(reference, estimate)?;
    let vad = VadConfig {
        threshold_db,
        frame: *frame,
    };
    let active = active_level(reference, &vad)?.active;
    distance_over(reference, estimate, frame, order, &active)
}

fn distance_over(
    reference: &Waveform,
    estimate: &Waveform,
    frame: &FrameConfig,
    order: usize,
    include: &[bool],
) -> Result<CepstralDistance> {
    if order == 0 {
        return Err(Error::InvalidConfig("LPC order must be positive".into()));
    }
    let frames = frame.num_frames(reference.len())?;
    // Squared square-root Hann is the periodic Hann window.
    let window: Vec<f64> = frame.window().iter().map(|w| w * w).collect();
    let windowed = |x: &[f64], start: usize| -> Vec<f64> {
        x[start..start + frame.window_len]
            .iter()
            .zip(&window)
            .map(|(a, w)| a * w)
            .collect()
    };
    let scale = 10.0 / LN_10 * 2f64.sqrt();
    let (mut total, mut used, mut skipped, mut inactive) = (0.0, 0usize, 0usize, 0usize);
    for n in 0..frames {
        if !include[n] {
            inactive += 1;
            continue;
        }
        let start = n * frame.hop;
        let fit_ref = lpc(&windowed(reference.samples(), start), order);
        let fit_est = lpc(&windowed(estimate.samples(), start), order);
        match (fit_ref, fit_est) {
            (Some(a), Some(b)) => {
                let ca = lpc_cepstrum(&a);
                let cb = lpc_cepstrum(&b);
                let d2: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y).powi(2)).sum();
                total += scale * d2.sqrt();
                used += 1;
            }
            _ => skipped += 1,
        }
    }
    if used == 0 {
        return Err(Error::NoActiveFrames);
    }
    Ok(CepstralDistance {
        mean: total / used as f64,
        frames_used: used,
        frames_skipped: skipped,
        frames_inactive: inactive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{apply_biquad, BiquadCoeffs};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..len).map(|_| StandardNormal.sample(&mut rng)).collect(), 16_000).unwrap()
    }

    #[test]
    fn lpc_recovers_ar2_process() {
        // x[t] = 0.6 x[t-1] - 0.3 x[t-2] + e[t]  ->  A(z) = 1 - 0.6 z^-1 + 0.3 z^-2
        let e = white(200_000, 1);
        let mut x = vec![0.0; e.len()];
        for t in 0..x.len() {
            let p1 = if t >= 1 { x[t - 1] } else { 0.0 };
            let p2 = if t >= 2 { x[t - 2] } else { 0.0 };
            x[t] = 0.6 * p1 - 0.3 * p2 + e.samples()[t];
        }
        let a = lpc(&x, 2).unwrap();
        assert!((a[0] + 0.6).abs() < 0.01 && (a[1] - 0.3).abs() < 0.01, "{a:?}");
    }

    #[test]
    fn cepstrum_of_single_pole() {
        // 1 / (1 - p z^-1) has cepstrum c_n = p^n / n.
        let p = 0.5;
        let c = lpc_cepstrum(&[-p, 0.0, 0.0, 0.0]);
        for (n, v) in c.iter().enumerate() {
            let n = n as f64 + 1.0;
            assert!((v - p.powf(n) / n).abs() < 1e-12);
        }
    }

    #[test]
    fn silent_frame_has_no_fit() {
        assert!(lpc(&[0.0; 64], 10).is_none());
    }

    #[test]
    fn identity_and_gain_invariance() {
        let f = FrameConfig::default();
        let x = white(16_000, 2);
        let cd = cepstral_distance(&x, &x, &f, 10).unwrap();
        assert!(cd.mean.abs() < 1e-9);
        assert_eq!(cd.frames_skipped, 0);
        let cd = cepstral_distance(&x, &x.scaled(7.5), &f, 10).unwrap();
        assert!(cd.mean.abs() < 1e-9);
    }

    #[test]
    fn stronger_tilt_is_farther() {
        let f = FrameConfig::default();
        let x = white(16_000, 3);
        let mut last = 0.0;
        for r in [0.1, 0.25, 0.375] {
            let tilted = apply_biquad(&x, &BiquadCoeffs::new(0.0, 0.0, -r, 0.0)).unwrap();
            let cd = cepstral_distance(&x, &tilted, &f, 10).unwrap().mean;
            assert!(cd > last, "tilt {r}: {cd} <= {last}");
            last = cd;
        }
    }

    #[test]
    fn silent_estimate_frames_are_skipped() {
        let f = FrameConfig::default();
        let x = white(8192, 4);
        let mut y = x.samples().to_vec();
        y[..4096].fill(0.0);
        let y = Waveform::new(y, 16_000).unwrap();
        let cd = cepstral_distance(&x, &y, &f, 10).unwrap();
        assert!(cd.frames_skipped > 0);
        assert_eq!(cd.frames_used + cd.frames_skipped, f.num_frames(8192).unwrap());
    }

    #[test]
    fn active_selection_ignores_quiet_frames() {
        let f = FrameConfig::default();
        // loud white first half, faint white second half
        let mut x = white(16_000, 3).into_samples();
        x[8_000..].iter_mut().for_each(|v| *v *= 1e-4);
        let x = Waveform::new(x, 16_000).unwrap();
        // estimate: exact in the loud half, tilted in the quiet half
        let tilted = apply_biquad(&x, &BiquadCoeffs::new(0.375, 0.0, 0.0, 0.0)).unwrap();
        let mut y = x.samples().to_vec();
        y[7_000..].copy_from_slice(&tilted.samples()[7_000..]);
        let y = Waveform::new(y, 16_000).unwrap();
        let all = cepstral_distance(&x, &y, &f, 10).unwrap();
        let active = cepstral_distance_active(&x, &y, &f, 10, -40.0).unwrap();
        assert!(all.mean > 0.1);
        assert!(active.frames_inactive > 25, "{active:?}");
        assert_eq!(active.frames_used + active.frames_inactive + active.frames_skipped, all.frames_used + all.frames_skipped);
        assert!(active.mean < 0.5 * all.mean, "{} vs {}", active.mean, all.mean);
    }
}
