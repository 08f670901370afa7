use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require, sample_count, SynthError};
use crate::waveform::Waveform;

/// One primary tone: relative amplitude `c` and frequency `f` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub c: f64,
    pub f: f64,
}

/// Frequency of DFT bin `k` for an `n`-sample record; tones placed here do not leak.
pub fn exact_bin_frequency(k: usize, sample_rate: f64, n: usize) -> f64 {
    k as f64 * sample_rate / n as f64
}

/// Quadratic stress-strain law `sigma = e0 * eps - e1 * eps^2` driven by
/// `eps(t) = amplitude * sum c_i sin(2 pi f_i t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMixSpec {
    pub e0: f64,
    pub e1: f64,
    pub amplitude: f64,
    pub tones: Vec<Tone>,
    pub duration: f64,
    pub sample_rate: f64,
}

/// Phenomenological contact nonlinearity: the linear part `e0 * eps` plus
/// harmonic and mixing lines of amplitude `h1 * amplitude^exponent * c_i * c_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HertzianMixSpec {
    pub e0: f64,
    pub h1: f64,
    pub amplitude: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    pub tones: Vec<Tone>,
    pub duration: f64,
    pub sample_rate: f64,
}

fn default_exponent() -> f64 {
    1.5
}

fn check_common(tones: &[Tone], duration: f64, sample_rate: f64) -> Result<usize, SynthError> {
    require(sample_rate > 0.0 && sample_rate.is_finite(), || {
        format!("sample rate must be positive, got {sample_rate}")
    })?;
    require(duration > 0.0 && duration.is_finite(), || format!("duration must be positive, got {duration}"))?;
    require(!tones.is_empty(), || "at least one tone is required".into())?;
    for t in tones {
        require(t.c > 0.0 && t.c.is_finite(), || format!("tone amplitude must be positive, got {}", t.c))?;
        require(t.f > 0.0 && t.f < sample_rate / 2.0, || {
            format!("tone frequency {} Hz must lie in (0, {}) Hz", t.f, sample_rate / 2.0)
        })?;
    }
    let n = sample_count(duration, sample_rate);
    require(n > 0, || "duration shorter than one sample".into())?;
    Ok(n)
}

fn strain(tones: &[Tone], amplitude: f64, t: f64) -> f64 {
    amplitude * tones.iter().map(|tone| tone.c * (2.0 * PI * tone.f * t).sin()).sum::<f64>()
}

pub fn quadratic_mix_waveform(spec: &QuadraticMixSpec) -> Result<Waveform, SynthError> {
    let n = check_common(&spec.tones, spec.duration, spec.sample_rate)?;
    require(spec.e0 > 0.0, || format!("e0 must be positive, got {}", spec.e0))?;
    require(spec.e1 >= 0.0, || format!("e1 must be non-negative, got {}", spec.e1))?;
    require(spec.amplitude >= 0.0, || format!("amplitude must be non-negative, got {}", spec.amplitude))?;
    let samples = (0..n)
        .map(|i| {
            let eps = strain(&spec.tones, spec.amplitude, i as f64 / spec.sample_rate);
            spec.e0 * eps - spec.e1 * eps * eps
        })
        .collect();
    Ok(Waveform::new(samples, spec.sample_rate)?)
}

pub fn hertzian_mix_waveform(spec: &HertzianMixSpec) -> Result<Waveform, SynthError> {
    let n = check_common(&spec.tones, spec.duration, spec.sample_rate)?;
    require(spec.e0 > 0.0, || format!("e0 must be positive, got {}", spec.e0))?;
    require(spec.h1 >= 0.0, || format!("h1 must be non-negative, got {}", spec.h1))?;
    require(spec.amplitude >= 0.0, || format!("amplitude must be non-negative, got {}", spec.amplitude))?;
    require(spec.exponent > 0.0, || format!("exponent must be positive, got {}", spec.exponent))?;

    let scale = spec.h1 * spec.amplitude.powf(spec.exponent);
    // (amplitude, frequency, sign) of every injected line
    let mut lines = Vec::new();
    for (i, a) in spec.tones.iter().enumerate() {
        lines.push((scale * a.c * a.c, 2.0 * a.f, -1.0));
        for b in &spec.tones[i + 1..] {
            let ab = scale * a.c * b.c;
            lines.push((ab, a.f + b.f, 1.0));
            lines.push((ab, (a.f - b.f).abs(), -1.0));
        }
    }
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / spec.sample_rate;
            let linear = spec.e0 * strain(&spec.tones, spec.amplitude, t);
            let mixing: f64 = lines
                .iter()
                .map(|&(amp, f, sign)| sign * amp * (2.0 * PI * f * t).cos())
                .sum();
            linear + mixing
        })
        .collect();
    Ok(Waveform::new(samples, spec.sample_rate)?)
}
