use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::batch::PlannedExample;
use crate::augment::{synthesize_example, AugmentSpec, MixedExample, VadConfig};
use crate::dsp::Waveform;
use crate::error::{Error, Result};

pub const SIDECAR_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRef {
    pub id: String,
    pub path: Option<PathBuf>,
}

/// Everything needed to rebuild one synthesized pair from its sources.
///
/// The resolved [`AugmentSpec`] is stored in full (filters, SNR, level and
/// noise crop), so regeneration does not depend on the random generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema_version: u32,
    pub example_id: String,
    pub global_seed: u64,
    pub epoch: u64,
    pub index: u64,
    pub speech: SourceRef,
    pub noise: SourceRef,
    pub spec: AugmentSpec,
    pub vad: VadConfig,
    pub sample_rate_hz: u32,
    pub num_samples: usize,
    pub sigma_s: f64,
    pub clipped_samples: usize,
}

impl Sidecar {
    pub fn new(
        example_id: String,
        global_seed: u64,
        plan: &PlannedExample,
        speech: SourceRef,
        noise: SourceRef,
        vad: VadConfig,
        example: &MixedExample,
    ) -> Self {
        Sidecar {
            schema_version: SIDECAR_VERSION,
            example_id,
            global_seed,
            epoch: plan.epoch,
            index: plan.index,
            speech,
            noise,
            spec: example.spec,
            vad,
            sample_rate_hz: example.mixture.sample_rate_hz(),
            num_samples: example.mixture.len(),
            sigma_s: example.sigma_s,
            clipped_samples: example.clipped_samples,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Sidecar = serde_json::from_str(s)?;
        if sc.schema_version != SIDECAR_VERSION {
            return Err(Error::InvalidConfig(format!(
                "sidecar schema {} is not supported",
                sc.schema_version
            )));
        }
        Ok(sc)
    }

    /// Rebuild the example from the original source audio.
    pub fn regenerate(&self, speech: &Waveform, noise: &Waveform) -> Result<MixedExample> {
        synthesize_example(speech, noise, &self.spec, &self.vad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::batch::{generate_epoch, BatchPlan};
    use crate::corpus::synth::SyntheticCorpus;
    use crate::par::Exec;

    #[test]
    fn sidecar_alone_regenerates_example() {
        let c = SyntheticCorpus::generate(2, 2, 1.0, 3).unwrap();
        let plan = BatchPlan {
            global_seed: 4,
            examples_per_epoch: 3,
            ..Default::default()
        };
        let epoch = generate_epoch(&c.speech, &c.noise, &plan, 0, Exec::Sequential).unwrap();
        for g in epoch.examples() {
            let sc = Sidecar::new(
                format!("ex{}", g.plan.index),
                plan.global_seed,
                &g.plan,
                SourceRef { id: format!("s{}", g.plan.speech_idx), path: None },
                SourceRef { id: format!("n{}", g.plan.noise_idx), path: None },
                plan.vad,
                &g.example,
            );
            let back = Sidecar::from_json(&sc.to_json().unwrap()).unwrap();
            assert_eq!(back, sc);
            let again = back
                .regenerate(&c.speech[g.plan.speech_idx], &c.noise[g.plan.noise_idx])
                .unwrap();
            assert_eq!(again, g.example);
        }
    }
}
