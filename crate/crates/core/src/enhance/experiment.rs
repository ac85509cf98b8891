//! Desk-scale comparison of the standard and level-normalized losses.
//!
//! Both modes see exactly the same training batches and validation set. The
//! standard loss gets its step size rescaled by `sigma_ref^(-2c)`, where
//! `sigma_ref` is the nominal target level, so the two modes take identical
//! steps whenever every example sits at the nominal level. Any difference in
//! the outcome then comes from the spread of levels inside a batch.

use serde::{Deserialize, Serialize};

use super::toy::{prepare_example, si_sdr_of_model, train_toy_model, EpochTrace, ToyMaskModel, TrainOptions};
use super::{extract_features, FeatureStats};
use crate::augment::{AugmentConfig, VadConfig};
use crate::corpus::batch::{generate_epoch, BatchPlan};
use crate::corpus::synth::SyntheticCorpus;
use crate::dsp::{stft, FrameConfig, Waveform};
use crate::error::{Error, Result};
use crate::loss::LossConfig;
use crate::par::Exec;

/// Epoch index reserved for the validation draw.
pub const VALIDATION_EPOCH: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    Standard,
    Normalized,
}

impl LossMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LossMode::Standard => "standard",
            LossMode::Normalized => "normalized",
        }
    }
}

impl std::str::FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(LossMode::Standard),
            "normalized" => Ok(LossMode::Normalized),
            other => Err(Error::InvalidConfig(format!("unknown loss mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyExperiment {
    pub seed: u64,
    pub epochs: usize,
    pub examples_per_epoch: usize,
    pub batch_size: usize,
    pub validation_examples: usize,
    /// Step size of the normalized loss; the standard loss is rescaled.
    pub learning_rate: f64,
    pub augment: AugmentConfig,
    pub loss: LossConfig,
    pub vad: VadConfig,
}

/// SNR spread of the toy experiment.
pub const TOY_SNR_STD_DB: f64 = 3.0;

impl Default for ToyExperiment {
    fn default() -> Self {
        ToyExperiment {
            seed: 0,
            epochs: 30,
            examples_per_epoch: 64,
            batch_size: 16,
            validation_examples: 32,
            learning_rate: 1e-4,
            augment: AugmentConfig {
                snr_std_db: TOY_SNR_STD_DB,
                ..AugmentConfig::default()
            },
            loss: LossConfig::default(),
            vad: VadConfig::default(),
        }
    }
}

impl ToyExperiment {
    pub fn train_plan(&self) -> BatchPlan {
        BatchPlan {
            global_seed: self.seed,
            batch_size: self.batch_size,
            examples_per_epoch: self.examples_per_epoch,
            augment: self.augment,
            vad: self.vad,
        }
    }

    /// Validation examples are drawn at the nominal level.
    pub fn validation_plan(&self) -> BatchPlan {
        BatchPlan {
            examples_per_epoch: self.validation_examples,
            augment: AugmentConfig {
                level_augmentation: false,
                ..self.augment
            },
            ..self.train_plan()
        }
    }

    pub fn step_size(&self, mode: LossMode) -> f64 {
        match mode {
            LossMode::Normalized => self.learning_rate,
            LossMode::Standard => {
                let sigma_ref = 10f64.powf(self.augment.level_mean_dbfs / 20.0);
                self.learning_rate * sigma_ref.powf(-2.0 * self.loss.c)
            }
        }
    }
}

/// Disjoint synthetic training and validation pools for one experiment seed:
/// 8 speech and 4 noise sources for training, 4 and 4 for validation, 1 s
/// utterances.
pub fn synthetic_split(seed: u64) -> Result<(SyntheticCorpus, SyntheticCorpus)> {
    let train = SyntheticCorpus::generate(8, 4, 1.0, seed.wrapping_mul(10))?;
    let val = SyntheticCorpus::generate(4, 4, 1.0, seed.wrapping_mul(10).wrapping_add(1000))?;
    Ok((train, val))
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub mode: LossMode,
    pub level_augmentation: bool,
    pub learning_rate: f64,
    pub initial_val_si_sdr: f64,
    pub trace: Vec<EpochTrace>,
    pub model: ToyMaskModel,
}

impl ExperimentRun {
    pub fn final_val_si_sdr(&self) -> f64 {
        self.trace.last().map_or(self.initial_val_si_sdr, |t| t.val_si_sdr)
    }
}

/// Train one toy model. Training draws from `train_*`, validation from `val_*`.
pub fn run_toy_experiment(
    train_speech: &[Waveform],
    train_noise: &[Waveform],
    val_speech: &[Waveform],
    val_noise: &[Waveform],
    exp: &ToyExperiment,
    mode: LossMode,
    exec: Exec,
) -> Result<ExperimentRun> {
    let frame = FrameConfig::default();
    let plan = exp.train_plan();

    // Feature statistics and the model's feature offset come from the first
    // epoch's mixtures.
    let first = generate_epoch(train_speech, train_noise, &plan, 0, exec)?;
    let mixtures: Vec<&Waveform> = first.examples().map(|g| &g.example.mixture).collect();
    let specs = exec
        .map(&mixtures, |w| stft(w, &frame))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let stats = FeatureStats::fit(&specs)?;
    let train_features = exec
        .map(&specs, |s| extract_features(s, Some(stats)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let validation = generate_epoch(val_speech, val_noise, &exp.validation_plan(), VALIDATION_EPOCH, exec)?;
    let validation = exec
        .map(&validation.into_mixed(), |ex| prepare_example(ex, stats, &frame))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    if validation.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let model = ToyMaskModel::new(frame, stats).centered_on(&train_features)?;
    drop(train_features);
    let initial_val_si_sdr = si_sdr_of_model(&model, &validation, exec)?;
    let opts = TrainOptions {
        epochs: exp.epochs,
        learning_rate: exp.step_size(mode),
        loss: exp.loss,
        normalized: mode == LossMode::Normalized,
        exec,
    };
    let mut first = Some(first);
    let (model, trace) = train_toy_model(
        model,
        |epoch| {
            let data = match first.take() {
                Some(f) if epoch == 1 => f,
                _ => generate_epoch(train_speech, train_noise, &plan, epoch as u64 - 1, exec)?,
            };
            Ok(data.into_mixed_batches())
        },
        &validation,
        &opts,
    )?;
    Ok(ExperimentRun {
        mode,
        level_augmentation: exp.augment.level_augmentation,
        learning_rate: opts.learning_rate,
        initial_val_si_sdr,
        trace,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (SyntheticCorpus, SyntheticCorpus, ToyExperiment) {
        let train = SyntheticCorpus::generate(3, 2, 1.0, 1).unwrap();
        let val = SyntheticCorpus::generate(2, 2, 1.0, 500).unwrap();
        let exp = ToyExperiment {
            epochs: 2,
            examples_per_epoch: 6,
            batch_size: 3,
            validation_examples: 3,
            augment: AugmentConfig {
                level_augmentation: false,
                ..Default::default()
            },
            ..Default::default()
        };
        (train, val, exp)
    }

    #[test]
    fn modes_coincide_without_level_augmentation() {
        let (train, val, exp) = tiny();
        let run = |m| {
            run_toy_experiment(&train.speech, &train.noise, &val.speech, &val.noise, &exp, m, Exec::Parallel).unwrap()
        };
        let (a, b) = (run(LossMode::Standard), run(LossMode::Normalized));
        for (x, y) in a.trace.iter().zip(&b.trace) {
            assert!((x.val_si_sdr - y.val_si_sdr).abs() < 1e-6, "{x:?} {y:?}");
        }
        for (x, y) in a.model.weights.iter().zip(&b.model.weights) {
            assert!((x - y).abs() <= 1e-8 * x.abs().max(1e-6));
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let (train, val, mut exp) = tiny();
        exp.augment.level_augmentation = true;
        let run = |exec| {
            run_toy_experiment(&train.speech, &train.noise, &val.speech, &val.noise, &exp, LossMode::Standard, exec)
                .unwrap()
        };
        let (a, b) = (run(Exec::Parallel), run(Exec::Sequential));
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("normalized".parse::<LossMode>().unwrap(), LossMode::Normalized);
        assert!("huber".parse::<LossMode>().is_err());
    }
}
