use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require, NoiseSource, SynthError};
use crate::waveform::Waveform;

/// Damped resonance: frequency in Hz, quality factor and gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub f: f64,
    pub q: f64,
    pub gain: f64,
}

/// Linear multi-resonance surrogate for a plate's transfer function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalPlateSpec {
    pub modes: Vec<Mode>,
    pub noise_rms: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKind {
    /// `y - strength * y^2`
    Quadratic,
    /// `y - strength * |y|^(3/2)`
    Hertzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub strength: f64,
}

impl Nonlinearity {
    fn apply(&self, y: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Quadratic => y - self.strength * y * y,
            NonlinearityKind::Hertzian => y - self.strength * y.abs().powf(1.5),
        }
    }
}

impl ModalPlateSpec {
    fn validate(&self, sample_rate: f64) -> Result<(), SynthError> {
        require(!self.modes.is_empty(), || "at least one mode is required".into())?;
        for m in &self.modes {
            require(m.f > 0.0 && m.f < sample_rate / 2.0, || {
                format!("mode frequency {} Hz must lie in (0, {}) Hz", m.f, sample_rate / 2.0)
            })?;
            require(m.q > 0.0 && m.q.is_finite(), || format!("mode Q must be positive, got {}", m.q))?;
            require(m.gain.is_finite(), || "mode gain must be finite".into())?;
        }
        require(self.noise_rms >= 0.0 && self.noise_rms.is_finite(), || {
            format!("noise_rms must be non-negative, got {}", self.noise_rms)
        })
    }

    /// Sampled impulse response over `n` samples.
    ///
    /// Each mode is generated with the two-term recurrence of a damped
    /// sinusoid, `h[i] = 2 r cos(w) h[i-1] - r^2 h[i-2]`.
    pub fn impulse_response(&self, sample_rate: f64, n: usize) -> Vec<f64> {
        let mut h = vec![0.0; n];
        for m in &self.modes {
            let r = (-PI * m.f / (m.q * sample_rate)).exp();
            let w = 2.0 * PI * m.f / sample_rate;
            let (a1, a2) = (2.0 * r * w.cos(), r * r);
            let (mut prev2, mut prev1) = (0.0, m.gain * r * w.sin());
            if n > 1 {
                h[1] += prev1;
            }
            for hi in h.iter_mut().skip(2) {
                let cur = a1 * prev1 - a2 * prev2;
                *hi += cur;
                prev2 = prev1;
                prev1 = cur;
            }
        }
        h
    }
}

/// Convolve the excitation with the modal impulse response (truncated to the
/// excitation length), apply the optional memoryless distortion, then add
/// seeded white noise.
pub fn modal_plate_response(
    excitation: &Waveform,
    spec: &ModalPlateSpec,
    nonlinearity: Option<Nonlinearity>,
) -> Result<Waveform, SynthError> {
    let rate = excitation.sample_rate();
    spec.validate(rate)?;
    if let Some(nl) = nonlinearity {
        require(nl.strength >= 0.0 && nl.strength.is_finite(), || {
            format!("nonlinearity strength must be non-negative, got {}", nl.strength)
        })?;
    }
    let x = excitation.samples();
    let n = x.len();
    let h = spec.impulse_response(rate, n);
    let mut y = vec![0.0; n];
    for (m, &xm) in x.iter().enumerate().filter(|(_, &v)| v != 0.0) {
        for (yi, hi) in y[m..].iter_mut().zip(&h) {
            *yi += xm * hi;
        }
    }
    if let Some(nl) = nonlinearity {
        y.iter_mut().for_each(|v| *v = nl.apply(*v));
    }
    NoiseSource::new(spec.seed).add_to(&mut y, spec.noise_rms);
    Ok(Waveform::with_start(y, rate, excitation.t0())?)
}
