//! Sampled waveforms, preprocessing variants and magnitude spectra.
//!
//! Two spectral pathways are supported: a DFT over the exact record length
//! and an FFT over the record zero-padded to the next power of two. Both go
//! through the same transform code; only the input length differs.

use std::sync::Arc;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spc::FrequencyBand;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("waveform has no samples")]
    Empty,
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("no positive magnitude inside band {f_min} Hz .. {f_max} Hz; normalization undefined")]
    AllZeroInBand { f_min: f64, f_max: f64 },
}

/// Uniformly sampled voltage record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: f64,
    t0: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self, WaveformError> {
        Self::with_start(samples, sample_rate, 0.0)
    }

    pub fn with_start(samples: Vec<f64>, sample_rate: f64, t0: f64) -> Result<Self, WaveformError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(WaveformError::InvalidSampleRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(WaveformError::Empty);
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(WaveformError::NonFinite { index });
        }
        Ok(Self { samples, sample_rate, t0 })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed waveform; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record length in seconds, `len / sample_rate`.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Multiply every sample by `factor`.
    pub fn scaled(&self, factor: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            sample_rate: self.sample_rate,
            t0: self.t0,
        }
    }

    fn map_samples(&self, samples: Vec<f64>) -> Waveform {
        Waveform { samples, sample_rate: self.sample_rate, t0: self.t0 }
    }
}

/// Subtract the first sample from the whole record.
pub fn dc_correct(w: &Waveform) -> Waveform {
    let offset = w.samples[0];
    w.map_samples(w.samples.iter().map(|v| v - offset).collect())
}

/// Append zeros up to the smallest power of two that is >= the record length.
pub fn zero_pad_pow2(w: &Waveform) -> Waveform {
    let target = w.len().next_power_of_two();
    let mut samples = Vec::with_capacity(target);
    samples.extend_from_slice(&w.samples);
    samples.resize(target, 0.0);
    w.map_samples(samples)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub dc_correct: bool,
    pub zero_pad: bool,
}

impl PreprocessOptions {
    pub const ALL: [PreprocessOptions; 4] = [
        PreprocessOptions { dc_correct: false, zero_pad: false },
        PreprocessOptions { dc_correct: false, zero_pad: true },
        PreprocessOptions { dc_correct: true, zero_pad: false },
        PreprocessOptions { dc_correct: true, zero_pad: true },
    ];

    /// DC correction runs before padding so the pad region stays zero.
    pub fn apply(&self, w: &Waveform) -> Waveform {
        let w = if self.dc_correct { dc_correct(w) } else { w.clone() };
        if self.zero_pad {
            zero_pad_pow2(&w)
        } else {
            w
        }
    }

    /// Short stable label, e.g. `dft-raw`, `fft-dc`.
    pub fn label(&self) -> &'static str {
        match (self.zero_pad, self.dc_correct) {
            (false, false) => "dft-raw",
            (false, true) => "dft-dc",
            (true, false) => "fft-raw",
            (true, true) => "fft-dc",
        }
    }
}

/// One-sided magnitude spectrum, bins `0 ..= n_input / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    magnitudes: Vec<f64>,
    freq_step: f64,
    n_input: usize,
}

impl Spectrum {
    /// Build a spectrum from raw parts. `n_input` must be at least
    /// `2 * (magnitudes.len() - 1)`; magnitudes must be finite and non-negative.
    pub fn from_parts(magnitudes: Vec<f64>, freq_step: f64, n_input: usize) -> Option<Self> {
        let ok = !magnitudes.is_empty()
            && freq_step.is_finite()
            && freq_step > 0.0
            && n_input >= 2 * (magnitudes.len() - 1)
            && magnitudes.iter().all(|m| m.is_finite() && *m >= 0.0);
        ok.then_some(Self { magnitudes, freq_step, n_input })
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn freq_step(&self) -> f64 {
        self.freq_step
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.freq_step
    }

    pub fn sample_rate(&self) -> f64 {
        self.freq_step * self.n_input as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate() / 2.0
    }

    /// Bins whose centre frequency lies inside the closed band.
    pub fn band_bins(&self, band: &FrequencyBand) -> std::ops::Range<usize> {
        let lo = (band.f_min() / self.freq_step).ceil();
        let hi = (band.f_max() / self.freq_step).floor();
        let mut lo = lo.max(0.0) as usize;
        let mut hi = (hi.max(-1.0) + 1.0) as usize;
        // Guard the float division against off-by-one at exact bin frequencies.
        while lo > 0 && self.frequency(lo - 1) >= band.f_min() {
            lo -= 1;
        }
        while lo < hi && self.frequency(lo) < band.f_min() {
            lo += 1;
        }
        while hi > lo && self.frequency(hi - 1) > band.f_max() {
            hi -= 1;
        }
        while hi < self.magnitudes.len() && self.frequency(hi) <= band.f_max() {
            hi += 1;
        }
        lo.min(self.magnitudes.len())..hi.min(self.magnitudes.len())
    }
}

/// Where the normalization maximum is searched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeScope {
    /// Maximum over the analysis band only.
    #[default]
    Band,
    /// Maximum over every bin of the one-sided spectrum.
    Full,
}

impl NormalizeScope {
    pub fn label(&self) -> &'static str {
        match self {
            NormalizeScope::Band => "band",
            NormalizeScope::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSpectrum {
    spectrum: Spectrum,
    norm_factor: f64,
}

impl NormalizedSpectrum {
    pub fn magnitudes(&self) -> &[f64] {
        &self.spectrum.magnitudes
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    pub fn freq_step(&self) -> f64 {
        self.spectrum.freq_step
    }

    pub fn n_input(&self) -> usize {
        self.spectrum.n_input
    }
}

/// Unwindowed DFT moduli `|sum_n w[n] exp(-2 pi i k n / N)|` for `k = 0 ..= N/2`.
pub fn magnitude_spectrum(w: &Waveform) -> Spectrum {
    let n = w.len();
    let mut buffer: Vec<Complex<f64>> = w.samples.iter().map(|&re| Complex::new(re, 0.0)).collect();
    let fft = plan_forward(n);
    fft.process(&mut buffer);
    let magnitudes = buffer[..=n / 2].iter().map(|c| c.norm()).collect();
    Spectrum { magnitudes, freq_step: w.sample_rate / n as f64, n_input: n }
}

fn plan_forward(n: usize) -> Arc<dyn rustfft::Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// Normalize to the band maximum (the default scope).
pub fn normalize(s: &Spectrum, band: &FrequencyBand) -> Result<NormalizedSpectrum, WaveformError> {
    normalize_with(s, band, NormalizeScope::Band)
}

/// Divide every bin by the maximum found in `scope`; the band must contain
/// at least one positive magnitude either way.
pub fn normalize_with(
    s: &Spectrum,
    band: &FrequencyBand,
    scope: NormalizeScope,
) -> Result<NormalizedSpectrum, WaveformError> {
    let in_band = &s.magnitudes[s.band_bins(band)];
    let band_max = in_band.iter().copied().fold(0.0_f64, f64::max);
    if band_max <= 0.0 {
        return Err(WaveformError::AllZeroInBand { f_min: band.f_min(), f_max: band.f_max() });
    }
    let norm_factor = match scope {
        NormalizeScope::Band => band_max,
        NormalizeScope::Full => s.magnitudes.iter().copied().fold(0.0_f64, f64::max),
    };
    let magnitudes = s.magnitudes.iter().map(|m| m / norm_factor).collect();
    Ok(NormalizedSpectrum {
        spectrum: Spectrum { magnitudes, freq_step: s.freq_step, n_input: s.n_input },
        norm_factor,
    })
}
