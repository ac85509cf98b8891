//! Speech enhancement training-data toolkit: STFT analysis and synthesis,
//! on-the-fly augmentation (random biquads, SNR and level mixing), a
//! compressed spectral loss with an optional level normalization, a toy
//! mask estimator and objective quality metrics.

pub mod augment;
pub mod corpus;
pub mod dsp;
pub mod enhance;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod par;

pub use augment::{
    active_level, apply_biquad, mix_at_snr, sample_augment_spec, scale_to_level, synthesize_example, AugmentConfig,
    AugmentSpec, BiquadCoeffs, MixedExample, VadConfig,
};
pub use dsp::{istft, stft, FrameConfig, Spectrogram, Waveform};
pub use enhance::{apply_gain, extract_features, oracle_wiener_gain, GainMask, ToyMaskModel};
pub use error::{Error, Result};
pub use loss::{compressed_loss, gain_loss, loss_grad_gain, normalized_loss, LossConfig, Normalization, Reduction};
pub use metrics::{evaluate, si_sdr, MetricConfig, MetricReport};
pub use par::Exec;
