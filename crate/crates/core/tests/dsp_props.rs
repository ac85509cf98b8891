use approx::assert_relative_eq;
use proptest::prelude::*;
use speechaug::dsp::interior_range;
use speechaug::{istft, stft, FrameConfig, Waveform};

fn wave(samples: Vec<f64>) -> Waveform {
    Waveform::new(samples, 16_000).unwrap()
}

fn samples(min_windows: usize) -> impl Strategy<Value = Vec<f64>> {
    (min_windows * 512..min_windows * 512 + 2_000).prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_on_interior(x in samples(4)) {
        let cfg = FrameConfig::default();
        let w = wave(x);
        let s = stft(&w, &cfg).unwrap();
        let back = istft(&s).unwrap();
        let r = interior_range(&cfg, s.num_frames());
        let a = &back.samples()[r.clone()];
        let b = &w.samples()[r];
        let err: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = b.iter().map(|q| q * q).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-6 * norm, "relative error {}", err / norm);
    }

    #[test]
    fn parseval(x in samples(2)) {
        let cfg = FrameConfig::default();
        let w = wave(x);
        let s = stft(&w, &cfg).unwrap();
        let win = cfg.window();
        let windowed: f64 = (0..s.num_frames())
            .map(|n| {
                w.samples()[n * cfg.hop..n * cfg.hop + cfg.window_len]
                    .iter()
                    .zip(&win)
                    .map(|(v, h)| (v * h).powi(2))
                    .sum::<f64>()
            })
            .sum();
        assert_relative_eq!(s.two_sided_energy() / cfg.fft_size as f64, windowed, max_relative = 1e-6);
    }

    #[test]
    fn linearity(
        pair in samples(2).prop_flat_map(|a| { let n = a.len(); (Just(a), prop::collection::vec(-1.0f64..1.0, n)) }),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let cfg = FrameConfig::default();
        let (x, y) = pair;
        let combo = wave(x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect());
        let lhs = stft(&combo, &cfg).unwrap();
        let sx = stft(&wave(x), &cfg).unwrap();
        let sy = stft(&wave(y), &cfg).unwrap();
        let scale = lhs.as_slice().iter().map(|c| c.norm()).fold(1e-300, f64::max);
        for ((l, p), q) in lhs.as_slice().iter().zip(sx.as_slice()).zip(sy.as_slice()) {
            prop_assert!((l - (p * a + q * b)).norm() <= 1e-9 * scale);
        }
    }
}

#[test]
fn sqrt_hann_cola() {
    let cfg = FrameConfig::default();
    let win = cfg.window();
    let frames = 12;
    let mut acc = vec![0.0; (frames - 1) * cfg.hop + cfg.window_len];
    for n in 0..frames {
        for (t, h) in win.iter().enumerate() {
            acc[n * cfg.hop + t] += h * h;
        }
    }
    let r = interior_range(&cfg, frames);
    let first = acc[r.start];
    for v in &acc[r] {
        assert_relative_eq!(*v, first, max_relative = 1e-9);
    }
}

#[test]
fn short_input_is_rejected() {
    let w = wave(vec![0.1; 511]);
    assert!(matches!(
        stft(&w, &FrameConfig::default()),
        Err(speechaug::Error::InsufficientLength { .. })
    ));
}
