//! Power-law compressed spectral loss and its level-normalized variant.
//!
//! For target `S` and estimate `S_hat` the loss blends a complex term and a
//! magnitude term on compressed spectra:
//!
//! ```text
//! L = alpha * sum |C(S) - C(S_hat)|^2 + (1 - alpha) * sum (|C(S)| - |C(S_hat)|)^2
//! C(z) = max(|z|, eps)^(c - 1) * z
//! ```
//!
//! `C(z)` equals `|z|^c e^{j phi(z)}` whenever `|z| >= eps` and goes smoothly
//! to zero at the origin.
//!
//! The normalized variant divides the target and the noisy input by the
//! target's active level `sigma_s` before applying the gain, which removes the
//! `a^{2c}` level dependence of the plain loss. The gain itself, and the
//! features it was computed from, are untouched.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::Spectrogram;
use crate::enhance::GainMask;
use crate::error::{Error, Result};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Plain sum over all time-frequency bins.
    #[default]
    Sum,
    /// Sum divided by the number of bins.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Compression exponent, `0 < c <= 1`.
    pub c: f64,
    /// Weight of the complex term, `0 <= alpha <= 1`.
    pub alpha: f64,
    /// Magnitude floor for the phase factor.
    pub epsilon: f64,
    pub reduction: Reduction,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            c: 0.3,
            alpha: 0.3,
            epsilon: 1e-12,
            reduction: Reduction::Sum,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(Error::InvalidConfig(format!("c must be in (0, 1], got {}", self.c)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `max(|z|, eps)^(c - 1) * z`.
    pub fn compress(&self, z: Complex64) -> Complex64 {
        z * self.epsilon.max(z.norm()).powf(self.c - 1.0)
    }
}

/// Whether the loss sees raw or level-normalized spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "sigma_s")]
pub enum Normalization {
    /// Standard, level-dependent loss.
    None,
    /// Divide target and noisy input by the given active speech level.
    Sigma(f64),
}

impl Normalization {
    fn divisor(self) -> Result<f64> {
        match self {
            Normalization::None => Ok(1.0),
            Normalization::Sigma(s) if s > 0.0 && s.is_finite() => Ok(s),
            Normalization::Sigma(s) => Err(Error::NonPositiveSigma(s)),
        }
    }
}

/// Loss value with its two components, already reduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub value: f64,
    pub complex_term: f64,
    pub magnitude_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub value: f64,
    pub complex_term: f64,
    pub magnitude_term: f64,
    /// `dL/dG`, same layout as the gain mask.
    pub grad_gain: Vec<f64>,
}

impl LossReport {
    pub fn terms(&self) -> LossTerms {
        LossTerms {
            value: self.value,
            complex_term: self.complex_term,
            magnitude_term: self.magnitude_term,
        }
    }
}

fn reduce_scale(cfg: &LossConfig, count: usize) -> f64 {
    match cfg.reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / count.max(1) as f64,
    }
}

/// Compressed loss between a target and an estimate spectrogram.
pub fn compressed_loss(s: &Spectrogram, s_hat: &Spectrogram, cfg: &LossConfig) -> Result<LossTerms> {
    cfg.validate()?;
    if !s.same_shape(s_hat) {
        return Err(Error::shape(s.shape_str(), s_hat.shape_str()));
    }
    let (mut complex, mut magnitude) = (0.0, 0.0);
    for (&a, &b) in s.as_slice().iter().zip(s_hat.as_slice()) {
        let ca = cfg.compress(a);
        let cb = cfg.compress(b);
        complex += (ca - cb).norm_sqr();
        magnitude += (ca.norm() - cb.norm()).powi(2);
    }
    let k = reduce_scale(cfg, s.as_slice().len());
    let (complex, magnitude) = (complex * k, magnitude * k);
    Ok(LossTerms {
        value: cfg.alpha * complex + (1.0 - cfg.alpha) * magnitude,
        complex_term: complex,
        magnitude_term: magnitude,
    })
}

/// Loss of the masked estimate `G * X` against `S`, with its gradient with
/// respect to every gain entry.
pub fn gain_loss(
    s: &Spectrogram,
    x: &Spectrogram,
    g: &GainMask,
    cfg: &LossConfig,
    norm: Normalization,
) -> Result<LossReport> {
    cfg.validate()?;
    if !s.same_shape(x) {
        return Err(Error::shape(s.shape_str(), x.shape_str()));
    }
    if g.num_bins() != s.num_bins() || g.num_frames() != s.num_frames() {
        return Err(Error::shape(s.shape_str(), g.shape_str()));
    }
    let inv = 1.0 / norm.divisor()?;
    let (c, alpha, eps) = (cfg.c, cfg.alpha, cfg.epsilon);

    let n = g.values().len();
    let mut grad = Vec::with_capacity(n);
    let (mut complex, mut magnitude) = (0.0, 0.0);
    for ((&sv, &xv), &gv) in s.as_slice().iter().zip(x.as_slice()).zip(g.values()) {
        let target = cfg.compress(sv * inv);
        let xn = xv * inv;
        let est_raw = xn * gv;
        let m = est_raw.norm();
        let f = eps.max(m).powf(c - 1.0);
        let est = est_raw * f;
        // d C(g x) / dg: c f x above the floor, f x below it.
        let slope = if m >= eps { c * f } else { f };
        let d_est = xn * slope;
        let d_est_abs = slope * xn.norm() * gv.signum();

        let diff = est - target;
        let diff_abs = est.norm() - target.norm();
        complex += diff.norm_sqr();
        magnitude += diff_abs * diff_abs;
        let d_complex = 2.0 * (diff.re * d_est.re + diff.im * d_est.im);
        let d_magnitude = 2.0 * diff_abs * d_est_abs;
        grad.push(alpha * d_complex + (1.0 - alpha) * d_magnitude);
    }
    let k = reduce_scale(cfg, n);
    if k != 1.0 {
        grad.iter_mut().for_each(|v| *v *= k);
    }
    let (complex, magnitude) = (complex * k, magnitude * k);
    Ok(LossReport {
        value: alpha * complex + (1.0 - alpha) * magnitude,
        complex_term: complex,
        magnitude_term: magnitude,
        grad_gain: grad,
    })
}

/// Level-normalized loss: `compressed_loss(S / sigma_s, G * (X / sigma_s))`.
pub fn normalized_loss(
    s: &Spectrogram,
    x: &Spectrogram,
    g: &GainMask,
    sigma_s: f64,
    cfg: &LossConfig,
) -> Result<LossReport> {
    gain_loss(s, x, g, cfg, Normalization::Sigma(sigma_s))
}

/// `dL/dG` of the standard (`normalized == false`) or normalized loss.
pub fn loss_grad_gain(
    s: &Spectrogram,
    x: &Spectrogram,
    g: &GainMask,
    cfg: &LossConfig,
    normalized: bool,
    sigma_s: f64,
) -> Result<Vec<f64>> {
    let norm = if normalized {
        Normalization::Sigma(sigma_s)
    } else {
        Normalization::None
    };
    Ok(gain_loss(s, x, g, cfg, norm)?.grad_gain)
}

/// Inputs of one utterance's loss evaluation.
#[derive(Debug, Clone, Copy)]
pub struct UtteranceLoss<'a> {
    pub target: &'a Spectrogram,
    pub noisy: &'a Spectrogram,
    pub gain: &'a GainMask,
    pub normalization: Normalization,
}

/// Per-utterance losses and their mean over the batch. Gradients are those of
/// the batch mean, i.e. each utterance's gradient divided by the batch size.
pub fn batch_loss(
    batch: &[UtteranceLoss<'_>],
    cfg: &LossConfig,
    exec: Exec,
) -> Result<(f64, Vec<LossReport>)> {
    let reports = exec
        .map(batch, |u| gain_loss(u.target, u.noisy, u.gain, cfg, u.normalization))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / batch.len().max(1) as f64;
    let mean = reports.iter().map(|r| r.value).sum::<f64>() * scale;
    let reports = reports
        .into_iter()
        .map(|mut r| {
            r.grad_gain.iter_mut().for_each(|v| *v *= scale);
            r
        })
        .collect();
    Ok((mean, reports))
}
