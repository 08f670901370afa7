//! Spectral peak counting for ultrasonic waveforms.
//!
//! The index counts local maxima of the normalised magnitude spectrum above
//! a sweep of thresholds and averages the counts. Around that core the crate
//! provides signal generators, dataset ingestion and the robustness studies
//! that probe how stable the index is.

pub mod ingest;
pub mod report;
pub mod spc;
pub mod stats;
pub mod study;
pub mod synth;
pub mod waveform;

pub use ingest::{Dataset, DatasetManifest, IngestError, MeasurementMeta, RecordKey, StudyRecord};
pub use spc::{
    find_peaks, normalized_spectrum, spc_curve, spc_index, spc_index_from_spectrum, FrequencyBand, SpcCurve, SpcError,
    SpcIndex, SpcParams, ThresholdGrid,
};
pub use waveform::{
    magnitude_spectrum, normalize, normalize_with, NormalizeScope, NormalizedSpectrum, PreprocessOptions, Spectrum,
    Waveform, WaveformError,
};
