//! Framing, square-root Hann STFT analysis and weighted overlap-add synthesis.
//!
//! Both analysis and synthesis use the periodic square-root Hann window
//! `w[t] = sin(pi t / L)`. At 50 % overlap the squared window sums to exactly
//! one, so `istft(stft(x))` reproduces `x` on every sample covered by two
//! frames. Other hops that divide the window are accepted as long as at least
//! two frames overlap; synthesis is then rescaled by `2 hop / L`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono time-domain signal. Full scale is 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite sample at index {i}")));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Self {
        Waveform {
            samples: vec![0.0; len],
            sample_rate_hz,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Multiply every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Copy of `len` samples starting at `offset`.
    pub fn slice(&self, offset: usize, len: usize) -> Waveform {
        Waveform {
            samples: self.samples[offset..offset + len].to_vec(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub(crate) fn from_vec_unchecked(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        debug_assert!(samples.iter().all(|s| s.is_finite()));
        Waveform {
            samples,
            sample_rate_hz,
        }
    }
}

/// STFT framing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub fft_size: usize,
    pub window_len: usize,
    pub hop: usize,
    pub sample_rate_hz: u32,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig::for_sample_rate(DEFAULT_SAMPLE_RATE)
    }
}

impl FrameConfig {
    /// 32 ms window, 16 ms hop, FFT size equal to the window.
    pub fn for_sample_rate(sample_rate_hz: u32) -> Self {
        let window_len = (sample_rate_hz as usize * 32) / 1000;
        FrameConfig {
            fft_size: window_len,
            window_len,
            hop: window_len / 2,
            sample_rate_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("frame config: {m}")));
        if self.sample_rate_hz == 0 {
            return bad("sample rate must be positive");
        }
        if self.hop == 0 || self.window_len == 0 {
            return bad("window and hop must be positive");
        }
        if self.window_len % self.hop != 0 {
            return bad("hop must divide the window length");
        }
        if self.window_len / self.hop < 2 {
            return bad("square-root Hann overlap-add needs at least 50% overlap");
        }
        if self.fft_size < self.window_len || self.fft_size % 2 != 0 {
            return bad("fft size must be even and at least the window length");
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of full frames in a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> Result<usize> {
        if len < self.window_len {
            return Err(Error::InsufficientLength {
                len,
                window: self.window_len,
            });
        }
        Ok((len - self.window_len) / self.hop + 1)
    }

    pub fn window_ms(&self) -> f64 {
        self.window_len as f64 * 1000.0 / self.sample_rate_hz as f64
    }

    pub fn hop_ms(&self) -> f64 {
        self.hop as f64 * 1000.0 / self.sample_rate_hz as f64
    }

    /// Periodic square-root Hann analysis window.
    pub fn window(&self) -> Vec<f64> {
        let l = self.window_len as f64;
        (0..self.window_len)
            .map(|t| (PI * t as f64 / l).sin())
            .collect()
    }

    /// Synthesis window: the analysis window scaled so that the product of
    /// both windows overlap-adds to one.
    pub fn synthesis_window(&self) -> Vec<f64> {
        let scale = 2.0 * self.hop as f64 / self.window_len as f64;
        self.window().into_iter().map(|w| w * scale).collect()
    }

    fn check_rate(&self, w: &Waveform) -> Result<()> {
        if w.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::UnsupportedSampleRate {
                found: w.sample_rate_hz(),
                expected: self.sample_rate_hz,
            });
        }
        Ok(())
    }
}

/// One-sided complex STFT, `num_bins` rows by `num_frames` columns.
///
/// Storage is frame-major: all bins of frame 0, then frame 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex64>,
    num_bins: usize,
    num_frames: usize,
    config: FrameConfig,
    signal_len: usize,
}

impl Spectrogram {
    pub fn from_frames(
        data: Vec<Complex64>,
        num_frames: usize,
        config: FrameConfig,
        signal_len: usize,
    ) -> Result<Self> {
        let num_bins = config.num_bins();
        if data.len() != num_bins * num_frames {
            return Err(Error::shape(
                format!("{num_bins}x{num_frames} = {} bins", num_bins * num_frames),
                format!("{} bins", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite spectrogram entry {i}")));
        }
        let covered = if num_frames == 0 {
            0
        } else {
            (num_frames - 1) * config.hop + config.window_len
        };
        Ok(Spectrogram {
            data,
            num_bins,
            num_frames,
            config,
            signal_len: signal_len.max(covered),
        })
    }

    pub fn zeros(num_frames: usize, config: FrameConfig) -> Self {
        let num_bins = config.num_bins();
        Spectrogram {
            data: vec![Complex64::new(0.0, 0.0); num_bins * num_frames],
            num_bins,
            num_frames,
            config,
            signal_len: (num_frames.max(1) - 1) * config.hop + config.window_len,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn config(&self) -> &FrameConfig {
        &self.config
    }

    /// Length of the waveform this spectrogram was computed from.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn get(&self, bin: usize, frame: usize) -> Complex64 {
        self.data[frame * self.num_bins + bin]
    }

    pub fn set(&mut self, bin: usize, frame: usize, v: Complex64) {
        self.data[frame * self.num_bins + bin] = v;
    }

    pub fn frame(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.num_bins..(n + 1) * self.num_bins]
    }

    /// All bins, frame-major.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn same_shape(&self, other: &Spectrogram) -> bool {
        self.num_bins == other.num_bins && self.num_frames == other.num_frames
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.num_bins, self.num_frames)
    }

    pub fn scaled(&self, a: f64) -> Spectrogram {
        self.map(|c| c * a)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Spectrogram {
        self.with_data(self.data.iter().map(|&c| f(c)).collect())
    }

    /// Sum of `|X|^2` with one-sided doubling of the bins strictly between
    /// DC and Nyquist.
    pub fn two_sided_energy(&self) -> f64 {
        let last = self.num_bins - 1;
        self.data
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = i % self.num_bins;
                let e = c.norm_sqr();
                if k == 0 || k == last {
                    e
                } else {
                    2.0 * e
                }
            })
            .sum()
    }

    pub(crate) fn with_data(&self, data: Vec<Complex64>) -> Spectrogram {
        debug_assert_eq!(data.len(), self.data.len());
        Spectrogram {
            data,
            num_bins: self.num_bins,
            num_frames: self.num_frames,
            config: self.config,
            signal_len: self.signal_len,
        }
    }
}

thread_local! {
    static PLANNER: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(size: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((size, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(size)
                } else {
                    planner.plan_fft_forward(size)
                }
            })
            .clone()
    })
}

/// Short-time Fourier transform with the square-root Hann analysis window.
///
/// Only full frames are analysed: `(len - window_len) / hop + 1` of them.
pub fn stft(w: &Waveform, cfg: &FrameConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    cfg.check_rate(w)?;
    let num_frames = cfg.num_frames(w.len())?;
    let window = cfg.window();
    let fft = plan(cfg.fft_size, false);
    let num_bins = cfg.num_bins();
    let x = w.samples();

    let mut data = Vec::with_capacity(num_bins * num_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for n in 0..num_frames {
        let start = n * cfg.hop;
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (t, (b, wv)) in buf.iter_mut().zip(&window).enumerate() {
            b.re = x[start + t] * wv;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend_from_slice(&buf[..num_bins]);
    }
    Ok(Spectrogram {
        data,
        num_bins,
        num_frames,
        config: *cfg,
        signal_len: w.len(),
    })
}

/// Weighted overlap-add synthesis. The output has the length of the signal
/// the spectrogram was computed from; samples past the last frame are zero.
pub fn istft(spec: &Spectrogram) -> Result<Waveform> {
    let cfg = spec.config;
    cfg.validate()?;
    if spec.num_bins != cfg.num_bins() || spec.data.len() != spec.num_bins * spec.num_frames {
        return Err(Error::shape(
            format!("{} bins", cfg.num_bins()),
            spec.shape_str(),
        ));
    }
    let covered = if spec.num_frames == 0 {
        0
    } else {
        (spec.num_frames - 1) * cfg.hop + cfg.window_len
    };
    let out_len = spec.signal_len.max(covered);
    let mut out = vec![0.0; out_len];
    let window = cfg.synthesis_window();
    let ifft = plan(cfg.fft_size, true);
    let n_fft = cfg.fft_size;
    let norm = 1.0 / n_fft as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    for n in 0..spec.num_frames {
        let frame = spec.frame(n);
        buf[..spec.num_bins].copy_from_slice(frame);
        // Hermitian completion; DC and Nyquist are taken as real.
        buf[0].im = 0.0;
        buf[n_fft / 2].im = 0.0;
        for k in 1..n_fft / 2 {
            buf[n_fft - k] = frame[k].conj();
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = n * cfg.hop;
        for t in 0..cfg.window_len {
            out[start + t] += buf[t].re * norm * window[t];
        }
    }
    Ok(Waveform::from_vec_unchecked(out, cfg.sample_rate_hz))
}

/// RMS of the raw (unwindowed) samples in each STFT frame.
pub fn frame_rms(w: &Waveform, cfg: &FrameConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let num_frames = cfg.num_frames(w.len())?;
    let x = w.samples();
    Ok((0..num_frames)
        .map(|n| {
            let f = &x[n * cfg.hop..n * cfg.hop + cfg.window_len];
            (f.iter().map(|s| s * s).sum::<f64>() / f.len() as f64).sqrt()
        })
        .collect())
}

/// Sample range `[start, end)` over which overlap-add reconstruction is exact.
pub fn interior_range(cfg: &FrameConfig, num_frames: usize) -> std::ops::Range<usize> {
    if num_frames == 0 {
        return 0..0;
    }
    let start = cfg.window_len - cfg.hop;
    let end = (num_frames - 1) * cfg.hop + cfg.hop;
    start..end.max(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> FrameConfig {
        FrameConfig::default()
    }

    fn noise(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16_000).unwrap()
    }

    #[test]
    fn default_framing_matches_16k_figures() {
        let c = cfg();
        assert_eq!((c.fft_size, c.window_len, c.hop), (512, 512, 256));
        assert_eq!(c.num_bins(), 257);
        assert_eq!(c.window_ms(), 32.0);
        assert_eq!(c.hop_ms(), 16.0);
        let c8 = FrameConfig::for_sample_rate(8000);
        assert_eq!((c8.window_len, c8.hop), (256, 128));
    }

    #[test]
    fn sqrt_hann_is_cola() {
        let c = cfg();
        let w = c.window();
        let ws = c.synthesis_window();
        for t in 0..c.hop {
            let s = w[t] * ws[t] + w[t + c.hop] * ws[t + c.hop];
            assert!((s - 1.0).abs() < 1e-9, "t={t}: {s}");
        }
        let quarter = FrameConfig { hop: 128, ..c };
        let w = quarter.window();
        let ws = quarter.synthesis_window();
        for t in 0..quarter.hop {
            let s: f64 = (0..4).map(|m| w[t + m * 128] * ws[t + m * 128]).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn frame_count_formula() {
        let c = cfg();
        assert_eq!(c.num_frames(512).unwrap(), 1);
        assert_eq!(c.num_frames(767).unwrap(), 1);
        assert_eq!(c.num_frames(768).unwrap(), 2);
        assert_eq!(c.num_frames(16_000).unwrap(), 61);
        assert!(matches!(
            stft(&Waveform::silence(511, 16_000), &c),
            Err(Error::InsufficientLength { len: 511, window: 512 })
        ));
    }

    #[test]
    fn dc_spectrum_is_window_spectrum() {
        let w = Waveform::new(vec![1.0; 4096], 16_000).unwrap();
        let c = cfg();
        let s = stft(&w, &c).unwrap();
        let win = c.window();
        let l = win.len() as f64;
        for k in 0..s.num_bins() {
            let expect: Complex64 = win
                .iter()
                .enumerate()
                .map(|(t, v)| Complex64::from_polar(*v, -2.0 * std::f64::consts::PI * (k * t) as f64 / l))
                .sum();
            for n in 0..s.num_frames() {
                assert!((s.get(k, n) - expect).norm() < 1e-9, "k={k} n={n}");
            }
        }
        assert!(s.get(0, 0).norm() > 2.9 * s.get(1, 0).norm());
    }

    #[test]
    fn bin_centred_tone_peaks_at_its_bin() {
        let f = 8.0 * 16_000.0 / 512.0;
        let x = (0..8000)
            .map(|t| (2.0 * PI * f * t as f64 / 16_000.0).sin())
            .collect();
        let s = stft(&Waveform::new(x, 16_000).unwrap(), &cfg()).unwrap();
        for n in 0..s.num_frames() {
            let peak = (0..s.num_bins())
                .max_by(|&a, &b| s.get(a, n).norm().total_cmp(&s.get(b, n).norm()))
                .unwrap();
            assert_eq!(peak, 8);
        }
    }

    #[test]
    fn round_trip_interior() {
        let c = cfg();
        let w = noise(16_000, 7);
        let s = stft(&w, &c).unwrap();
        let y = istft(&s).unwrap();
        assert_eq!(y.len(), w.len());
        let r = interior_range(&c, s.num_frames());
        let (mut num, mut den) = (0.0, 0.0);
        for t in r {
            num += (y.samples()[t] - w.samples()[t]).powi(2);
            den += w.samples()[t].powi(2);
        }
        assert!((num / den).sqrt() <= 1e-6);
    }

    #[test]
    fn silence_in_silence_out() {
        let s = stft(&Waveform::silence(4096, 16_000), &cfg()).unwrap();
        assert!(istft(&s).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_frame_impulse_gives_windowed_impulse() {
        let c = cfg();
        let mut x = vec![0.0; 512];
        x[200] = 1.0;
        let s = stft(&Waveform::new(x, 16_000).unwrap(), &c).unwrap();
        assert_eq!(s.num_frames(), 1);
        let y = istft(&s).unwrap();
        let w = c.window();
        let ws = c.synthesis_window();
        for (t, v) in y.samples().iter().enumerate() {
            let expect = if t == 200 { w[200] * ws[200] } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn istft_rejects_wrong_bin_count() {
        let c = cfg();
        let s = Spectrogram {
            data: vec![Complex64::new(0.0, 0.0); 100],
            num_bins: 100,
            num_frames: 1,
            config: c,
            signal_len: 512,
        };
        assert!(matches!(istft(&s), Err(Error::ShapeMismatch { .. })));
        assert!(Spectrogram::from_frames(vec![Complex64::new(0.0, 0.0); 100], 1, c, 512).is_err());
    }

    #[test]
    fn parseval_consistency() {
        let c = cfg();
        let w = noise(8192, 3);
        let s = stft(&w, &c).unwrap();
        let win = c.window();
        let mut windowed = 0.0;
        for n in 0..s.num_frames() {
            for t in 0..c.window_len {
                windowed += (w.samples()[n * c.hop + t] * win[t]).powi(2);
            }
        }
        let ratio = s.two_sided_energy() / windowed;
        assert!((ratio / c.fft_size as f64 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn frame_rms_cases() {
        let c = cfg();
        let constant = Waveform::new(vec![0.3; 4096], 16_000).unwrap();
        assert!(frame_rms(&constant, &c)
            .unwrap()
            .iter()
            .all(|r| (r - 0.3).abs() < 1e-12));
        assert!(frame_rms(&Waveform::silence(4096, 16_000), &c)
            .unwrap()
            .iter()
            .all(|&r| r == 0.0));
        let sine: Vec<f64> = (0..16_000)
            .map(|t| (2.0 * PI * 440.0 * t as f64 / 16_000.0).sin())
            .collect();
        let rms = frame_rms(&Waveform::new(sine, 16_000).unwrap(), &c).unwrap();
        assert_eq!(rms.len(), c.num_frames(16_000).unwrap());
        for r in rms {
            assert!((r / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn waveform_rejects_non_finite() {
        assert!(Waveform::new(vec![0.0, f64::NAN], 16_000).is_err());
        assert!(Waveform::new(vec![0.0], 0).is_err());
    }

    #[test]
    fn rate_mismatch_is_rejected() {
        let w = Waveform::silence(4096, 8000);
        assert!(matches!(
            stft(&w, &cfg()),
            Err(Error::UnsupportedSampleRate { found: 8000, .. })
        ));
    }
}
