use std::path::Path;

use serde::{Deserialize, Serialize};

use super::batch::BatchPlan;
use crate::augment::{AugmentConfig, VadConfig};
use crate::dsp::FrameConfig;
use crate::enhance::ToyExperiment;
use crate::error::{Error, Result};

/// Top-level TOML configuration shared by the CLI subcommands.
///
/// ```toml
/// seed = 7
/// count = 200
/// batch_size = 16
///
/// [augment]
/// snr_mean_db = 5.0
/// level_augmentation = false
///
/// [toy]
/// epochs = 30
/// learning_rate = 1e-4
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Examples per epoch (or written by `synthesize`).
    pub count: usize,
    pub batch_size: usize,
    pub vad_threshold_db: f64,
    pub augment: AugmentConfig,
    /// Settings of `train-toy`; its seed is taken from `seed`.
    pub toy: ToyExperiment,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            count: 64,
            batch_size: 16,
            vad_threshold_db: crate::augment::DEFAULT_VAD_THRESHOLD_DB,
            augment: AugmentConfig::default(),
            toy: ToyExperiment::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        self.augment.validate()?;
        self.vad().validate()?;
        self.toy.augment.validate()?;
        self.toy.loss.validate()?;
        if !(self.toy.learning_rate > 0.0) || !self.toy.learning_rate.is_finite() {
            return Err(Error::InvalidConfig("toy learning_rate must be positive".into()));
        }
        if self.toy.batch_size == 0 || self.toy.validation_examples == 0 {
            return Err(Error::InvalidConfig("toy batch_size and validation_examples must be positive".into()));
        }
        Ok(())
    }

    pub fn vad(&self) -> VadConfig {
        VadConfig {
            threshold_db: self.vad_threshold_db,
            frame: FrameConfig::default(),
        }
    }

    pub fn batch_plan(&self) -> BatchPlan {
        BatchPlan {
            global_seed: self.seed,
            batch_size: self.batch_size,
            examples_per_epoch: self.count,
            augment: self.augment,
            vad: self.vad(),
        }
    }

    pub fn toy_experiment(&self) -> ToyExperiment {
        ToyExperiment {
            seed: self.seed,
            ..self.toy
        }
    }
}
