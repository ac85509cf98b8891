//! Suppression-gain application, log-power features and reference gain
//! estimators.

pub mod experiment;
mod toy;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};

pub use experiment::{run_toy_experiment, synthetic_split, ExperimentRun, LossMode, ToyExperiment};
pub use toy::{
    prepare_example, si_sdr_of_model, train_toy_model, EpochTrace, PreparedExample, ToyMaskModel,
    TrainOptions,
};

/// Floor inside the log-power features.
pub const FEATURE_EPSILON: f64 = 1e-12;

/// Global scalar statistics used to standardize log-power features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: f64,
    pub var: f64,
}

impl FeatureStats {
    /// Mean and variance of the raw log-power over every kept bin of every
    /// spectrogram.
    pub fn fit<'a>(specs: impl IntoIterator<Item = &'a Spectrogram>) -> Result<Self> {
        let (mut n, mut mean, mut m2) = (0u64, 0.0, 0.0);
        for spec in specs {
            for frame in 0..spec.num_frames() {
                for k in 1..spec.num_bins() - 1 {
                    let p = log_power(spec.get(k, frame));
                    n += 1;
                    let d = p - mean;
                    mean += d / n as f64;
                    m2 += d * (p - mean);
                }
            }
        }
        if n == 0 {
            return Err(Error::EmptyCorpus);
        }
        let var = m2 / n as f64;
        if !(var > 0.0) {
            return Err(Error::InvalidConfig("feature variance is zero".into()));
        }
        Ok(FeatureStats { mean, var })
    }

    pub fn normalize(&self, p: f64) -> f64 {
        (p - self.mean) / self.var.sqrt()
    }

    pub fn denormalize(&self, f: f64) -> f64 {
        f * self.var.sqrt() + self.mean
    }
}

fn log_power(x: Complex64) -> f64 {
    (x.norm_sqr() + FEATURE_EPSILON).log10()
}

/// Standardized log-power features without the DC and Nyquist bins,
/// frame-major (`dim` values per frame).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    dim: usize,
    num_frames: usize,
    pub stats: FeatureStats,
}

impl FeatureMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frame(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    /// Undo the standardization.
    pub fn raw_log_power(&self) -> Vec<f64> {
        self.values.iter().map(|&f| self.stats.denormalize(f)).collect()
    }
}

/// `log10(|X|^2 + eps)` over bins `1..num_bins-1`, standardized with `stats`
/// or, when absent, with statistics of `x` itself.
pub fn extract_features(x: &Spectrogram, stats: Option<FeatureStats>) -> Result<FeatureMatrix> {
    let stats = match stats {
        Some(s) => s,
        None => FeatureStats::fit([x])?,
    };
    let dim = x.num_bins() - 2;
    let mut values = Vec::with_capacity(dim * x.num_frames());
    for n in 0..x.num_frames() {
        values.extend(x.frame(n)[1..=dim].iter().map(|&c| stats.normalize(log_power(c))));
    }
    Ok(FeatureMatrix {
        values,
        dim,
        num_frames: x.num_frames(),
        stats,
    })
}

/// Real-valued gain per time-frequency bin, frame-major like [`Spectrogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct GainMask {
    values: Vec<f64>,
    num_bins: usize,
    num_frames: usize,
}

impl GainMask {
    pub fn from_values(values: Vec<f64>, num_bins: usize, num_frames: usize) -> Result<Self> {
        if values.len() != num_bins * num_frames {
            return Err(Error::shape(
                format!("{num_bins}x{num_frames}"),
                format!("{} gains", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite gain".into()));
        }
        Ok(GainMask {
            values,
            num_bins,
            num_frames,
        })
    }

    pub fn ones(num_bins: usize, num_frames: usize) -> Self {
        GainMask {
            values: vec![1.0; num_bins * num_frames],
            num_bins,
            num_frames,
        }
    }

    /// All zeros except the DC and Nyquist rows, which pass through.
    pub fn closed(num_bins: usize, num_frames: usize) -> Self {
        let mut g = GainMask {
            values: vec![0.0; num_bins * num_frames],
            num_bins,
            num_frames,
        };
        g.pin_edges();
        g
    }

    /// Set the DC and Nyquist rows to 1.
    pub fn pin_edges(&mut self) {
        for frame in self.values.chunks_mut(self.num_bins) {
            frame[0] = 1.0;
            frame[self.num_bins - 1] = 1.0;
        }
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.values[frame * self.num_bins + bin]
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.num_bins, self.num_frames)
    }
}

/// `S_hat = G * X` bin by bin.
pub fn apply_gain(x: &Spectrogram, g: &GainMask) -> Result<Spectrogram> {
    if g.num_bins != x.num_bins() || g.num_frames != x.num_frames() {
        return Err(Error::shape(x.shape_str(), g.shape_str()));
    }
    Ok(x.with_data(x.as_slice().iter().zip(&g.values).map(|(&c, &gv)| c * gv).collect()))
}

/// `|S|^2 / (|S|^2 + |N|^2 + eps)`, with DC and Nyquist pinned to 1.
pub fn oracle_wiener_gain(s: &Spectrogram, n: &Spectrogram) -> Result<GainMask> {
    if !s.same_shape(n) {
        return Err(Error::shape(s.shape_str(), n.shape_str()));
    }
    let values = s
        .as_slice()
        .iter()
        .zip(n.as_slice())
        .map(|(a, b)| {
            let ps = a.norm_sqr();
            ps / (ps + b.norm_sqr() + FEATURE_EPSILON)
        })
        .collect();
    let mut g = GainMask {
        values,
        num_bins: s.num_bins(),
        num_frames: s.num_frames(),
    };
    g.pin_edges();
    Ok(g)
}
