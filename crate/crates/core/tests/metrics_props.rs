use proptest::prelude::*;
use speechaug::metrics::{fw_seg_snr, seg_snr, FwSegConfig, SEG_SNR_MAX_DB, SEG_SNR_MIN_DB};
use speechaug::{evaluate, si_sdr, FrameConfig, MetricConfig, Waveform};

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2_048usize..6_000).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
    })
}

fn wave(v: Vec<f64>) -> Waveform {
    Waveform::new(v, 16_000).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn si_sdr_is_scale_invariant((r, e) in pair(), mix in 0.0f64..2.0, log_a in -2.0f64..2.0) {
        let reference = wave(r.clone());
        let estimate = wave(r.iter().zip(&e).map(|(a, b)| a + mix * b).collect());
        let base = si_sdr(&reference, &estimate).unwrap();
        let scaled = si_sdr(&reference, &estimate.scaled(10f64.powf(log_a))).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-6);
    }

    #[test]
    fn segmental_metrics_stay_in_bounds((r, e) in pair(), mix in 0.0f64..3.0) {
        let reference = wave(r.clone());
        let estimate = wave(r.iter().zip(&e).map(|(a, b)| a + mix * b).collect());
        let frame = FrameConfig::default();
        for v in [
            seg_snr(&reference, &estimate, &frame).unwrap(),
            fw_seg_snr(&reference, &estimate, &frame, &FwSegConfig::default()).unwrap(),
        ] {
            prop_assert!((SEG_SNR_MIN_DB..=SEG_SNR_MAX_DB).contains(&v), "{}", v);
        }
    }

    #[test]
    fn report_is_finite((r, e) in pair()) {
        let m = evaluate(&wave(r), &wave(e), &MetricConfig::default()).unwrap();
        prop_assert!(m.si_sdr_db.is_finite() && m.fw_seg_snr_db.is_finite());
        prop_assert!(m.cepstral_distance >= 0.0 && m.seg_snr_db.is_finite());
    }
}

#[test]
fn zero_reference_is_an_error() {
    let z = wave(vec![0.0; 4_000]);
    let e = wave(vec![0.1; 4_000]);
    assert!(matches!(si_sdr(&z, &e), Err(speechaug::Error::ZeroReference)));
    assert!(matches!(
        evaluate(&z, &e, &MetricConfig::default()),
        Err(speechaug::Error::ZeroReference)
    ));
}
