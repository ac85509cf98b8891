//! A per-frame affine mask estimator trained by plain gradient descent.
//!
//! The model maps one frame of standardized log-power features (DC and
//! Nyquist dropped) to one frame of gains through `sigmoid(W (f - c) + b)`,
//! where `c` is a fixed per-bin offset (usually the training-set mean of each
//! feature). The offset does not change the function class, only the
//! coordinates gradient descent works in. It is
//! just large enough to react to the batch-level weighting of the training
//! loss, which is what the toy experiment is about.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::augment::MixedExample;
use crate::dsp::{istft, stft, FrameConfig, Spectrogram, Waveform};
use crate::enhance::{apply_gain, extract_features, FeatureMatrix, FeatureStats, GainMask};
use crate::error::{Error, Result};
use crate::loss::{gain_loss, LossConfig, Normalization};
use crate::metrics::si_sdr;
use crate::par::Exec;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyMaskModel {
    pub version: u32,
    pub dim: usize,
    /// Row-major `dim x dim`, output index first.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Per-bin feature offset subtracted before the affine map.
    #[serde(default)]
    pub center: Vec<f64>,
    pub stats: FeatureStats,
    pub frame: FrameConfig,
}

impl ToyMaskModel {
    /// All-zero parameters: every gain starts at 0.5.
    pub fn new(frame: FrameConfig, stats: FeatureStats) -> Self {
        let dim = frame.num_bins() - 2;
        ToyMaskModel {
            version: CHECKPOINT_VERSION,
            dim,
            weights: vec![0.0; dim * dim],
            bias: vec![0.0; dim],
            center: vec![0.0; dim],
            stats,
            frame,
        }
    }

    /// Set the per-bin offset to the mean feature vector over all frames.
    pub fn centered_on<'a>(mut self, features: impl IntoIterator<Item = &'a FeatureMatrix>) -> Result<Self> {
        let mut sum = vec![0.0; self.dim];
        let mut frames = 0usize;
        for f in features {
            self.check(f)?;
            for n in 0..f.num_frames() {
                sum.iter_mut().zip(f.frame(n)).for_each(|(a, v)| *a += v);
            }
            frames += f.num_frames();
        }
        if frames == 0 {
            return Err(Error::EmptyCorpus);
        }
        self.center = sum.into_iter().map(|v| v / frames as f64).collect();
        Ok(self)
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn check(&self, features: &FeatureMatrix) -> Result<()> {
        if features.dim() != self.dim {
            return Err(Error::shape(
                format!("{} features per frame", self.dim),
                format!("{}", features.dim()),
            ));
        }
        Ok(())
    }

    fn centered(&self, frame: &[f64], out: &mut [f64]) {
        for ((o, x), c) in out.iter_mut().zip(frame).zip(&self.center) {
            *o = x - c;
        }
    }

    /// Gains for every frame; DC and Nyquist pass through.
    pub fn forward(&self, features: &FeatureMatrix) -> Result<GainMask> {
        self.check(features)?;
        let bins = self.dim + 2;
        let mut values = vec![1.0; bins * features.num_frames()];
        let mut f = vec![0.0; self.dim];
        for n in 0..features.num_frames() {
            self.centered(features.frame(n), &mut f);
            let out = &mut values[n * bins + 1..n * bins + 1 + self.dim];
            for (k, o) in out.iter_mut().enumerate() {
                let row = &self.weights[k * self.dim..(k + 1) * self.dim];
                let z = self.bias[k] + row.iter().zip(&f).map(|(w, x)| w * x).sum::<f64>();
                *o = sigmoid(z);
            }
        }
        GainMask::from_values(values, bins, features.num_frames())
    }

    /// Back-propagate `dL/dG` to `(dL/dW, dL/db)`.
    fn backward(&self, features: &FeatureMatrix, gain: &GainMask, grad_gain: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let bins = self.dim + 2;
        let mut dw = vec![0.0; self.weights.len()];
        let mut db = vec![0.0; self.dim];
        let mut f = vec![0.0; self.dim];
        for n in 0..features.num_frames() {
            self.centered(features.frame(n), &mut f);
            for k in 0..self.dim {
                let idx = n * bins + k + 1;
                let g = gain.values()[idx];
                let dz = grad_gain[idx] * g * (1.0 - g);
                if dz == 0.0 {
                    continue;
                }
                db[k] += dz;
                for (w, x) in dw[k * self.dim..(k + 1) * self.dim].iter_mut().zip(&f) {
                    *w += dz * x;
                }
            }
        }
        (dw, db)
    }

    /// Enhance a noisy spectrogram.
    pub fn enhance(&self, noisy: &Spectrogram) -> Result<Spectrogram> {
        let features = extract_features(noisy, Some(self.stats))?;
        apply_gain(noisy, &self.forward(&features)?)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let mut m: ToyMaskModel = serde_json::from_reader(r)?;
        if m.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "checkpoint version {} is not supported",
                m.version
            )));
        }
        if m.center.is_empty() {
            m.center = vec![0.0; m.dim];
        }
        if m.weights.len() != m.dim * m.dim || m.bias.len() != m.dim || m.center.len() != m.dim {
            return Err(Error::shape(
                format!("{0}x{0} weights, {0} biases and {0} offsets", m.dim),
                format!(
                    "{} weights, {} biases and {} offsets",
                    m.weights.len(),
                    m.bias.len(),
                    m.center.len()
                ),
            ));
        }
        Ok(m)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Spectra and features of one example, ready for loss evaluation.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub noisy: Spectrogram,
    pub target: Spectrogram,
    pub features: FeatureMatrix,
    pub target_wave: Waveform,
    pub sigma_s: f64,
}

/// STFT both signals and extract features from the un-normalized mixture.
pub fn prepare_example(ex: &MixedExample, stats: FeatureStats, frame: &FrameConfig) -> Result<PreparedExample> {
    let noisy = stft(&ex.mixture, frame)?;
    let target = stft(&ex.target, frame)?;
    let features = extract_features(&noisy, Some(stats))?;
    Ok(PreparedExample {
        noisy,
        target,
        features,
        target_wave: ex.target.clone(),
        sigma_s: ex.sigma_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub loss: LossConfig,
    /// Evaluate the loss on level-normalized spectra.
    pub normalized: bool,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 20,
            learning_rate: 1e-3,
            loss: LossConfig::default(),
            normalized: true,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches.
    pub loss: f64,
    /// Mean SI-SDR of the enhanced validation set.
    pub val_si_sdr: f64,
}

/// Mean SI-SDR (dB) of the model's output over `set`.
pub fn si_sdr_of_model(model: &ToyMaskModel, set: &[PreparedExample], exec: Exec) -> Result<f64> {
    let scores = exec
        .map(set, |p| -> Result<f64> {
            let g = model.forward(&p.features)?;
            let est = istft(&apply_gain(&p.noisy, &g)?)?;
            si_sdr(&p.target_wave, &est)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len().max(1) as f64)
}

/// Train `model` with gradient descent on the batches returned by
/// `epoch_batches(epoch)` for `epoch` in `1..=opts.epochs`.
///
/// Per-example gradients may be computed in parallel; they are always summed
/// in batch order, so the result does not depend on the thread count.
pub fn train_toy_model<F>(
    mut model: ToyMaskModel,
    mut epoch_batches: F,
    validation: &[PreparedExample],
    opts: &TrainOptions,
) -> Result<(ToyMaskModel, Vec<EpochTrace>)>
where
    F: FnMut(usize) -> Result<Vec<Vec<MixedExample>>>,
{
    opts.loss.validate()?;
    if !(opts.learning_rate > 0.0 && opts.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {}",
            opts.learning_rate
        )));
    }
    let mut trace = Vec::with_capacity(opts.epochs);
    for epoch in 1..=opts.epochs {
        let batches = epoch_batches(epoch)?;
        let (mut loss_sum, mut batch_count) = (0.0, 0usize);
        for batch in batches.iter().filter(|b| !b.is_empty()) {
            let current = &model;
            let results = opts
                .exec
                .map(batch, |ex| -> Result<(f64, Vec<f64>, Vec<f64>)> {
                    let p = prepare_example(ex, current.stats, &current.frame)?;
                    let g = current.forward(&p.features)?;
                    let norm = if opts.normalized {
                        Normalization::Sigma(p.sigma_s)
                    } else {
                        Normalization::None
                    };
                    let report = gain_loss(&p.target, &p.noisy, &g, &opts.loss, norm)?;
                    let (dw, db) = current.backward(&p.features, &g, &report.grad_gain);
                    Ok((report.value, dw, db))
                })
                .into_iter()
                .collect::<Result<Vec<_>>>()?;

            let scale = opts.learning_rate / results.len() as f64;
            let mut batch_loss = 0.0;
            let mut dw = vec![0.0; model.weights.len()];
            let mut db = vec![0.0; model.dim];
            for (value, w, b) in &results {
                batch_loss += value;
                dw.iter_mut().zip(w).for_each(|(a, v)| *a += v);
                db.iter_mut().zip(b).for_each(|(a, v)| *a += v);
            }
            batch_loss /= results.len() as f64;
            if !batch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            model.weights.iter_mut().zip(&dw).for_each(|(w, d)| *w -= scale * d);
            model.bias.iter_mut().zip(&db).for_each(|(b, d)| *b -= scale * d);
            loss_sum += batch_loss;
            batch_count += 1;
        }
        if model.weights.iter().chain(&model.bias).any(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        let val_si_sdr = if validation.is_empty() {
            f64::NAN
        } else {
            si_sdr_of_model(&model, validation, opts.exec)?
        };
        let loss = loss_sum / batch_count.max(1) as f64;
        log::debug!("epoch {epoch}: loss {loss:.6e}, val SI-SDR {val_si_sdr:.3} dB");
        trace.push(EpochTrace {
            epoch,
            loss,
            val_si_sdr,
        });
    }
    Ok((model, trace))
}
