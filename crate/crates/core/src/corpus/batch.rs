use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{sample_augment_spec, synthesize_example, AugmentConfig, AugmentSpec, MixedExample, VadConfig};
use crate::dsp::Waveform;
use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchPlan {
    pub global_seed: u64,
    pub batch_size: usize,
    pub examples_per_epoch: usize,
    pub augment: AugmentConfig,
    pub vad: VadConfig,
}

impl Default for BatchPlan {
    fn default() -> Self {
        BatchPlan {
            global_seed: 0,
            batch_size: 16,
            examples_per_epoch: 64,
            augment: AugmentConfig::default(),
            vad: VadConfig::default(),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one example's private random stream.
pub fn example_seed(global_seed: u64, epoch: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(global_seed) ^ epoch) ^ index)
}

/// Every random decision for one example, before any audio is touched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedExample {
    pub epoch: u64,
    pub index: u64,
    pub seed: u64,
    pub speech_idx: usize,
    pub noise_idx: usize,
    pub spec: AugmentSpec,
}

/// Draw the pairing, augmentation parameters and noise crop for one example.
pub fn plan_example(
    plan: &BatchPlan,
    epoch: u64,
    index: u64,
    speech_lens: &[usize],
    noise_lens: &[usize],
) -> Result<PlannedExample> {
    if speech_lens.is_empty() || noise_lens.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let seed = example_seed(plan.global_seed, epoch, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speech_idx = rng.random_range(0..speech_lens.len());
    let noise_idx = rng.random_range(0..noise_lens.len());
    let mut spec = sample_augment_spec(&mut rng, &plan.augment);
    spec.seed = seed;
    let (s_len, n_len) = (speech_lens[speech_idx], noise_lens[noise_idx]);
    if n_len < s_len {
        return Err(Error::NoiseTooShort {
            noise: n_len,
            speech: s_len,
            offset: 0,
        });
    }
    spec.noise_offset = rng.random_range(0..=n_len - s_len);
    Ok(PlannedExample {
        epoch,
        index,
        seed,
        speech_idx,
        noise_idx,
        spec,
    })
}

#[derive(Debug, Clone)]
pub struct GeneratedExample {
    pub plan: PlannedExample,
    pub example: MixedExample,
}

#[derive(Debug)]
pub struct SkippedExample {
    pub index: u64,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct EpochExamples {
    pub batches: Vec<Vec<GeneratedExample>>,
    pub skipped: Vec<SkippedExample>,
}

impl EpochExamples {
    pub fn examples(&self) -> impl Iterator<Item = &GeneratedExample> {
        self.batches.iter().flatten()
    }

    pub fn into_mixed_batches(self) -> Vec<Vec<MixedExample>> {
        self.batches
            .into_iter()
            .map(|b| b.into_iter().map(|g| g.example).collect())
            .collect()
    }

    pub fn into_mixed(self) -> Vec<MixedExample> {
        self.into_mixed_batches().into_iter().flatten().collect()
    }
}

/// Synthesize all examples of one epoch and group them into batches.
///
/// Each example depends only on `(plan, epoch, index)` and the source pools,
/// so the result is identical for every `exec` and thread count. Examples
/// that fail (silent noise, short noise) are skipped and reported.
pub fn generate_epoch(
    speech: &[Waveform],
    noise: &[Waveform],
    plan: &BatchPlan,
    epoch: u64,
    exec: Exec,
) -> Result<EpochExamples> {
    if speech.is_empty() || noise.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if plan.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be positive".into()));
    }
    plan.augment.validate()?;
    plan.vad.validate()?;
    let speech_lens: Vec<usize> = speech.iter().map(Waveform::len).collect();
    let noise_lens: Vec<usize> = noise.iter().map(Waveform::len).collect();
    let results = exec.map_range(plan.examples_per_epoch, |i| {
        let index = i as u64;
        plan_example(plan, epoch, index, &speech_lens, &noise_lens)
            .and_then(|p| {
                let example = synthesize_example(&speech[p.speech_idx], &noise[p.noise_idx], &p.spec, &plan.vad)?;
                Ok(GeneratedExample { plan: p, example })
            })
            .map_err(|error| SkippedExample { index, error })
    });
    let mut out = EpochExamples::default();
    let mut current = Vec::with_capacity(plan.batch_size);
    for r in results {
        match r {
            Ok(g) => {
                current.push(g);
                if current.len() == plan.batch_size {
                    out.batches.push(std::mem::take(&mut current));
                }
            }
            Err(s) => {
                log::warn!("example {} skipped: {}", s.index, s.error);
                out.skipped.push(s);
            }
        }
    }
    if !current.is_empty() {
        out.batches.push(current);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth::SyntheticCorpus;

    #[test]
    fn seeds_differ_per_coordinate() {
        let base = example_seed(1, 0, 0);
        assert_ne!(base, example_seed(2, 0, 0));
        assert_ne!(base, example_seed(1, 1, 0));
        assert_ne!(base, example_seed(1, 0, 1));
        assert_eq!(base, example_seed(1, 0, 0));
    }

    #[test]
    fn same_plan_same_first_batch() {
        let c = SyntheticCorpus::generate(3, 2, 1.0, 5).unwrap();
        let plan = BatchPlan {
            global_seed: 11,
            batch_size: 4,
            examples_per_epoch: 8,
            ..Default::default()
        };
        let a = generate_epoch(&c.speech, &c.noise, &plan, 0, Exec::Parallel).unwrap();
        let b = generate_epoch(&c.speech, &c.noise, &plan, 0, Exec::Sequential).unwrap();
        assert_eq!(a.batches.len(), 2);
        for (x, y) in a.examples().zip(b.examples()) {
            assert_eq!(x.plan, y.plan);
            assert_eq!(x.example, y.example);
        }
    }

    #[test]
    fn different_seeds_change_pairings() {
        let lens = vec![16_000; 50];
        let noise = vec![32_000; 50];
        let pairs = |seed| -> Vec<(usize, usize)> {
            let plan = BatchPlan {
                global_seed: seed,
                ..Default::default()
            };
            (0..20)
                .map(|i| {
                    let p = plan_example(&plan, 0, i, &lens, &noise).unwrap();
                    (p.speech_idx, p.noise_idx)
                })
                .collect()
        };
        assert_ne!(pairs(1), pairs(2));
    }

    #[test]
    fn silent_noise_is_skipped_not_fatal() {
        let c = SyntheticCorpus::generate(2, 1, 1.0, 9).unwrap();
        let noise = vec![Waveform::silence(32_000, 16_000), c.noise[0].clone()];
        let plan = BatchPlan {
            examples_per_epoch: 20,
            batch_size: 5,
            ..Default::default()
        };
        let out = generate_epoch(&c.speech, &noise, &plan, 0, Exec::Parallel).unwrap();
        assert!(!out.skipped.is_empty());
        assert_eq!(out.examples().count() + out.skipped.len(), 20);
        assert!(out.skipped.iter().all(|s| matches!(s.error, Error::NoActiveFrames)));
    }

    #[test]
    fn empty_pools_are_rejected() {
        assert!(matches!(
            generate_epoch(&[], &[], &BatchPlan::default(), 0, Exec::Sequential),
            Err(Error::EmptyCorpus)
        ));
    }
}
