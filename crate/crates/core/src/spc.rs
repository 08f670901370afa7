//! Peak counting over a sliding threshold and the averaged index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::waveform::{
    magnitude_spectrum, normalize_with, NormalizeScope, NormalizedSpectrum, PreprocessOptions,
    Waveform, WaveformError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpcError {
    #[error("invalid frequency band: need 0 <= f_min < f_max, got {f_min} .. {f_max}")]
    InvalidBand { f_min: f64, f_max: f64 },
    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),
    #[error("band {f_min} Hz .. {f_max} Hz is out of range (Nyquist {nyquist} Hz)")]
    BandOutOfRange { f_min: f64, f_max: f64, nyquist: f64 },
    #[error("threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
}

impl SpcError {
    pub fn is_all_zero_in_band(&self) -> bool {
        matches!(self, SpcError::Waveform(WaveformError::AllZeroInBand { .. }))
    }
}

/// Closed analysis band `[f_min, f_max]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand", into = "RawBand")]
pub struct FrequencyBand {
    f_min: f64,
    f_max: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBand {
    f_min: f64,
    f_max: f64,
}

impl TryFrom<RawBand> for FrequencyBand {
    type Error = SpcError;
    fn try_from(raw: RawBand) -> Result<Self, SpcError> {
        FrequencyBand::new(raw.f_min, raw.f_max)
    }
}

impl From<FrequencyBand> for RawBand {
    fn from(b: FrequencyBand) -> Self {
        RawBand { f_min: b.f_min, f_max: b.f_max }
    }
}

impl FrequencyBand {
    pub fn new(f_min: f64, f_max: f64) -> Result<Self, SpcError> {
        if f_min.is_finite() && f_max.is_finite() && 0.0 <= f_min && f_min < f_max {
            Ok(Self { f_min, f_max })
        } else {
            Err(SpcError::InvalidBand { f_min, f_max })
        }
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }
}

/// Equally spaced thresholds `thr_min + i * thr_step`, `i = 0 .. n_thr`,
/// with `n_thr = floor((thr_max - thr_min) / thr_step) + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct ThresholdGrid {
    thr_min: f64,
    thr_step: f64,
    thr_max: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    thr_min: f64,
    thr_step: f64,
    thr_max: f64,
}

impl TryFrom<RawGrid> for ThresholdGrid {
    type Error = SpcError;
    fn try_from(raw: RawGrid) -> Result<Self, SpcError> {
        ThresholdGrid::new(raw.thr_min, raw.thr_step, raw.thr_max)
    }
}

impl From<ThresholdGrid> for RawGrid {
    fn from(g: ThresholdGrid) -> Self {
        RawGrid { thr_min: g.thr_min, thr_step: g.thr_step, thr_max: g.thr_max }
    }
}

// Relative slack on the floor so that e.g. (1 - 0.001) / 0.111 counts as 9.
const GRID_SLACK: f64 = 1e-9;

impl ThresholdGrid {
    pub fn new(thr_min: f64, thr_step: f64, thr_max: f64) -> Result<Self, SpcError> {
        let finite = thr_min.is_finite() && thr_step.is_finite() && thr_max.is_finite();
        if !finite {
            return Err(SpcError::InvalidGrid("values must be finite".into()));
        }
        if !(thr_min > 0.0 && thr_min <= 1.0) {
            return Err(SpcError::InvalidGrid(format!("thr_min {thr_min} outside (0, 1]")));
        }
        if thr_step <= 0.0 {
            return Err(SpcError::InvalidGrid(format!("thr_step {thr_step} must be positive")));
        }
        if thr_max > 1.0 {
            return Err(SpcError::InvalidGrid(format!("thr_max {thr_max} exceeds 1")));
        }
        if thr_max < thr_min {
            return Err(SpcError::InvalidGrid(format!("thr_max {thr_max} below thr_min {thr_min}")));
        }
        Ok(Self { thr_min, thr_step, thr_max })
    }

    pub fn thr_min(&self) -> f64 {
        self.thr_min
    }

    pub fn thr_step(&self) -> f64 {
        self.thr_step
    }

    pub fn thr_max(&self) -> f64 {
        self.thr_max
    }

    pub fn len(&self) -> usize {
        let ratio = (self.thr_max - self.thr_min) / self.thr_step;
        (ratio + GRID_SLACK).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid values in ascending order. The last value is snapped onto
    /// `thr_max` when it lands there up to rounding.
    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let v = self.thr_min + i as f64 * self.thr_step;
                if (v - self.thr_max).abs() <= GRID_SLACK * self.thr_step {
                    self.thr_max
                } else {
                    v.min(self.thr_max)
                }
            })
            .collect()
    }
}

/// Every parameter that influences the index value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpcParams {
    pub band: FrequencyBand,
    pub grid: ThresholdGrid,
    pub preprocess: PreprocessOptions,
    #[serde(default)]
    pub normalize: NormalizeScope,
}

impl SpcParams {
    pub fn new(band: FrequencyBand, grid: ThresholdGrid, preprocess: PreprocessOptions) -> Self {
        Self { band, grid, preprocess, normalize: NormalizeScope::Band }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpcCurve {
    thresholds: Vec<OrderedThreshold>,
    counts: Vec<u32>,
}

/// Threshold stored by bit pattern so curves can be compared exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
struct OrderedThreshold(#[serde(with = "f64_bits")] u64);

mod f64_bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(f64::from_bits(*bits))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        f64::deserialize(d).map(f64::to_bits)
    }
}

impl SpcCurve {
    fn new(thresholds: &[f64], counts: Vec<u32>) -> Self {
        debug_assert_eq!(thresholds.len(), counts.len());
        let curve = Self {
            thresholds: thresholds.iter().map(|t| OrderedThreshold(t.to_bits())).collect(),
            counts,
        };
        debug_assert!(curve.is_monotone(), "SPC curve must be non-increasing");
        curve
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.thresholds.iter().map(|t| f64::from_bits(t.0)).collect()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.thresholds.iter().map(|t| f64::from_bits(t.0)).zip(self.counts.iter().copied())
    }

    /// Count at the grid point closest to `thr`.
    pub fn count_near(&self, thr: f64) -> Option<u32> {
        self.points()
            .min_by(|a, b| (a.0 - thr).abs().total_cmp(&(b.0 - thr).abs()))
            .map(|(_, c)| c)
    }

    pub fn is_monotone(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn mean(&self) -> f64 {
        let total: u64 = self.counts.iter().map(|&c| u64::from(c)).sum();
        total as f64 / self.counts.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpcIndex {
    pub value: f64,
    pub curve: SpcCurve,
    pub params: SpcParams,
}

fn check_band(s: &NormalizedSpectrum, band: &FrequencyBand) -> Result<std::ops::Range<usize>, SpcError> {
    let spectrum = s.spectrum();
    let out_of_range = SpcError::BandOutOfRange {
        f_min: band.f_min(),
        f_max: band.f_max(),
        nyquist: spectrum.nyquist(),
    };
    if band.f_max() > spectrum.nyquist() {
        return Err(out_of_range);
    }
    let bins = spectrum.band_bins(band);
    if bins.is_empty() {
        return Err(out_of_range);
    }
    Ok(bins)
}

/// Strict local maxima whose (leftmost) bin lies in `bins`, with their heights.
/// A flat run counts once when both of its outer neighbours are lower.
fn local_maxima(mags: &[f64], bins: std::ops::Range<usize>) -> Vec<(usize, f64)> {
    let mut peaks = Vec::new();
    for k in bins.start.max(1)..bins.end {
        let h = mags[k];
        if mags[k - 1] >= h {
            continue;
        }
        let mut j = k;
        while j + 1 < mags.len() && mags[j + 1] == h {
            j += 1;
        }
        if j + 1 < mags.len() && mags[j + 1] < h {
            peaks.push((k, h));
        }
    }
    peaks
}

/// Bin indices of peaks strictly above `thr` inside `band`.
pub fn find_peaks(s: &NormalizedSpectrum, band: &FrequencyBand, thr: f64) -> Result<Vec<usize>, SpcError> {
    if !(thr > 0.0 && thr <= 1.0) {
        return Err(SpcError::InvalidThreshold(thr));
    }
    let bins = check_band(s, band)?;
    Ok(local_maxima(s.magnitudes(), bins)
        .into_iter()
        .filter(|&(_, h)| h > thr)
        .map(|(k, _)| k)
        .collect())
}

pub fn spc_curve(s: &NormalizedSpectrum, band: &FrequencyBand, grid: &ThresholdGrid) -> Result<SpcCurve, SpcError> {
    let bins = check_band(s, band)?;
    let mut heights: Vec<f64> = local_maxima(s.magnitudes(), bins).into_iter().map(|(_, h)| h).collect();
    heights.sort_by(f64::total_cmp);
    let thresholds = grid.values();
    let counts = thresholds
        .iter()
        .map(|&thr| (heights.len() - heights.partition_point(|&h| h <= thr)) as u32)
        .collect();
    Ok(SpcCurve::new(&thresholds, counts))
}

/// Preprocess, transform and normalize a waveform according to `params`.
pub fn normalized_spectrum(w: &Waveform, params: &SpcParams) -> Result<NormalizedSpectrum, SpcError> {
    let prepared = params.preprocess.apply(w);
    let spectrum = magnitude_spectrum(&prepared);
    Ok(normalize_with(&spectrum, &params.band, params.normalize)?)
}

/// Index from an already normalized spectrum; `params.preprocess` is only recorded.
pub fn spc_index_from_spectrum(s: &NormalizedSpectrum, params: &SpcParams) -> Result<SpcIndex, SpcError> {
    let curve = spc_curve(s, &params.band, &params.grid)?;
    Ok(SpcIndex { value: curve.mean(), curve, params: *params })
}

pub fn spc_index(w: &Waveform, params: &SpcParams) -> Result<SpcIndex, SpcError> {
    let ns = normalized_spectrum(w, params)?;
    spc_index_from_spectrum(&ns, params)
}
