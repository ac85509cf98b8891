use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use speechaug::augment::measured_snr_db;
use speechaug::corpus::{synth_test_signal, SignalKind};
use speechaug::{
    active_level, apply_biquad, mix_at_snr, sample_augment_spec, scale_to_level, synthesize_example, AugmentConfig,
    AugmentSpec, BiquadCoeffs, VadConfig, Waveform,
};

fn pair(seed: u64) -> (Waveform, Waveform) {
    let speech = synth_test_signal(SignalKind::SpeechLike, 1.0, seed).unwrap();
    let kind = if seed % 2 == 0 { SignalKind::White } else { SignalKind::Pink };
    (speech, synth_test_signal(kind, 2.0, seed + 50_000).unwrap())
}

fn spec_strategy() -> impl Strategy<Value = AugmentSpec> {
    any::<u64>().prop_map(|seed| AugmentSpec::from_seed(seed, &AugmentConfig::default()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_preserves_snr_and_ratio(seed in 0u64..1000, snr in -20.0f64..40.0, level in -60.0f64..0.0) {
        let vad = VadConfig::default();
        let (speech, noise) = pair(seed);
        let mix = mix_at_snr(&speech, &noise, snr, &vad).unwrap();
        let noise_part = Waveform::new(
            mix.mixture.samples().iter().zip(speech.samples()).map(|(m, s)| m - s).collect(),
            16_000,
        ).unwrap();
        let before = measured_snr_db(&speech, &noise_part, &vad).unwrap();
        let (m2, t2, gain) = scale_to_level(&mix.mixture, &speech, level, &vad).unwrap();
        let after = measured_snr_db(&t2, &noise_part.scaled(gain), &vad).unwrap();
        prop_assert!((before - after).abs() <= 1e-6);
        prop_assert!((before - snr).abs() <= 1e-6);
        for ((m, t), (m0, t0)) in m2.samples().iter().zip(t2.samples()).zip(mix.mixture.samples().iter().zip(speech.samples())) {
            prop_assert!((m - gain * m0).abs() <= 1e-12 && (t - gain * t0).abs() <= 1e-12);
        }
    }

    #[test]
    fn example_components_add_up(seed in 0u64..1000, spec in spec_strategy()) {
        let vad = VadConfig::default();
        let (speech, noise) = pair(seed);
        let ex = synthesize_example(&speech, &noise, &spec, &vad).unwrap();
        prop_assert_eq!(ex.mixture.len(), ex.target.len());
        for ((m, t), n) in ex.mixture.samples().iter().zip(ex.target.samples()).zip(ex.noise.samples()) {
            prop_assert!((m - t - n).abs() <= 1e-12 * m.abs().max(1e-3));
        }
        // levels are measured after filtering
        let filtered = apply_biquad(&speech, &spec.speech_filter).unwrap();
        let sigma = active_level(&filtered, &vad).unwrap().sigma;
        let gain = 10f64.powf(spec.level_dbfs / 20.0) / sigma;
        for (t, f) in ex.target.samples().iter().zip(filtered.samples()) {
            prop_assert!((t - gain * f).abs() <= 1e-9 * gain.max(1.0));
        }
        prop_assert!((measured_snr_db(&ex.target, &ex.noise, &vad).unwrap() - spec.snr_db).abs() < 1e-6);
        prop_assert!((20.0 * ex.sigma_s.log10() - spec.level_dbfs).abs() < 1e-6);
    }

    #[test]
    fn synthesis_is_deterministic(seed in 0u64..1000, spec in spec_strategy()) {
        let vad = VadConfig::default();
        let (speech, noise) = pair(seed);
        let a = synthesize_example(&speech, &noise, &spec, &vad).unwrap();
        let b = synthesize_example(&speech.clone(), &noise.clone(), &spec, &vad).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn biquad_preserves_length(len in 1usize..4000, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = BiquadCoeffs::sample(&mut rng);
        let w = Waveform::new(vec![0.25; len], 16_000).unwrap();
        prop_assert_eq!(apply_biquad(&w, &c).unwrap().len(), len);
    }
}

#[test]
fn sampled_filters_are_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100_000 {
        let c = BiquadCoeffs::sample(&mut rng);
        // Jury conditions for z^2 + r3 z + r4
        assert!(c.r4.abs() < 1.0 && c.r3.abs() < 1.0 + c.r4, "{c:?}");
        assert!(c.as_array().iter().all(|r| r.abs() <= 0.375));
    }
}

#[test]
fn identity_filter_is_identity() {
    let (speech, _) = pair(3);
    assert_eq!(apply_biquad(&speech, &BiquadCoeffs::new(0.0, 0.0, 0.0, 0.0)).unwrap(), speech);
}

#[test]
fn unstable_filter_is_rejected() {
    let (speech, _) = pair(4);
    assert!(matches!(
        apply_biquad(&speech, &BiquadCoeffs::new(0.0, 0.0, 0.0, 1.5)),
        Err(speechaug::Error::UnstableFilter { .. })
    ));
}

#[test]
fn switches_leave_other_draws_alone() {
    let on = AugmentConfig::default();
    let off = AugmentConfig {
        spectral_shaping: false,
        level_augmentation: false,
        ..on
    };
    for seed in 0..50 {
        let a = sample_augment_spec(&mut ChaCha8Rng::seed_from_u64(seed), &on);
        let b = sample_augment_spec(&mut ChaCha8Rng::seed_from_u64(seed), &off);
        assert_eq!(a.snr_db, b.snr_db);
        assert_eq!(b.level_dbfs, -28.0);
        assert_eq!(b.speech_filter, BiquadCoeffs::new(0.0, 0.0, 0.0, 0.0));
    }
}
