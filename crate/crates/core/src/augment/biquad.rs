use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

/// Bound on each coefficient of the random spectral-shaping filter.
pub const COEFF_BOUND: f64 = 0.375;

/// Coefficients of `H(z) = (1 + r1 z^-1 + r2 z^-2) / (1 + r3 z^-1 + r4 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BiquadCoeffs {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
}

impl BiquadCoeffs {
    pub const IDENTITY: BiquadCoeffs = BiquadCoeffs {
        r1: 0.0,
        r2: 0.0,
        r3: 0.0,
        r4: 0.0,
    };

    pub fn new(r1: f64, r2: f64, r3: f64, r4: f64) -> Self {
        BiquadCoeffs { r1, r2, r3, r4 }
    }

    /// Draw each coefficient independently from `U[-3/8, 3/8]`.
    ///
    /// Any such draw is stable: `|r4| <= 3/8 < 1` and `|r3| <= 3/8 < 5/8 <= 1 + r4`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut draw = || rng.random_range(-COEFF_BOUND..=COEFF_BOUND);
        BiquadCoeffs {
            r1: draw(),
            r2: draw(),
            r3: draw(),
            r4: draw(),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }

    /// Stability triangle for `1 + a1 z^-1 + a2 z^-2`: `|a2| < 1`, `|a1| < 1 + a2`.
    pub fn is_stable(&self) -> bool {
        self.r4.abs() < 1.0 && self.r3.abs() < 1.0 + self.r4
    }

    /// Roots of `z^2 + r3 z + r4`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.r3 * self.r3 - 4.0 * self.r4, 0.0).sqrt();
        let b = Complex64::new(-self.r3, 0.0);
        [(b + disc) * 0.5, (b - disc) * 0.5]
    }

    /// `H(e^{j omega})`.
    pub fn frequency_response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (1.0 + self.r1 * z1 + self.r2 * z2) / (1.0 + self.r3 * z1 + self.r4 * z2)
    }
}

/// Direct-form I filtering with zero initial state.
pub fn apply_biquad(w: &Waveform, c: &BiquadCoeffs) -> Result<Waveform> {
    if !c.is_stable() || c.as_array().iter().any(|v| !v.is_finite()) {
        return Err(Error::UnstableFilter { r3: c.r3, r4: c.r4 });
    }
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    let out = w
        .samples()
        .iter()
        .map(|&x| {
            let y = x + c.r1 * x1 + c.r2 * x2 - c.r3 * y1 - c.r4 * y2;
            x2 = x1;
            x1 = x;
            y2 = y1;
            y1 = y;
            y
        })
        .collect();
    Waveform::new(out, w.sample_rate_hz())
}
