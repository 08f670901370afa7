//! Waveform files, measurement metadata and dataset manifests.

mod binary;
mod delimited;
mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::waveform::{Waveform, WaveformError};

pub use self::binary::{read_binary_waveform, write_binary_waveform, BinaryLayout, Dtype, Endianness};
pub use self::delimited::{read_csv_waveform, write_csv_waveform};
pub use self::manifest::{load_manifest, DatasetManifest, FileFormat, ManifestRecord};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: file contains no samples")]
    EmptyFile { path: PathBuf },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: non-uniform sampling at sample {index} (dt = {dt} s, expected {expected} s)")]
    NonUniformSampling { path: PathBuf, index: usize, dt: f64, expected: f64 },
    #[error("{path}: no time column and no sample rate given")]
    MissingSampleRate { path: PathBuf },
    #[error("{path}: sample rate {found} Hz does not match declared {declared} Hz")]
    RateMismatch { path: PathBuf, found: f64, declared: f64 },
    #[error("{path}: truncated, need {needed} bytes but file has {actual}")]
    TruncatedFile { path: PathBuf, needed: usize, actual: usize },
    #[error("unknown binary layout '{0}'")]
    UnknownLayout(String),
    #[error("{path}: {found} samples, manifest declares {declared}")]
    LengthMismatch { path: PathBuf, found: usize, declared: usize },
    #[error("manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },
    #[error("referenced file {0} does not exist")]
    MissingFile(PathBuf),
    #[error("duplicate record key {0}")]
    DuplicateKey(RecordKey),
    #[error("invalid metadata for {key}: {msg}")]
    InvalidMeta { key: RecordKey, msg: String },
    #[error("{key}: excitation {excitation_pct} % must be recorded at {expected} dB, found {gain_db} dB")]
    InvalidPairing { key: RecordKey, excitation_pct: u32, gain_db: u32, expected: u32 },
    #[error("{path}: {source}")]
    Waveform { path: PathBuf, source: WaveformError },
}

/// Excitation level (percent of full drive) and the receiver gain used with it.
pub const EXCITATION_GAIN_PAIRS: [(u32, u32); 6] = [(5, 35), (10, 28), (20, 22), (40, 16), (80, 10), (100, 10)];

pub fn expected_gain_db(excitation_pct: u32) -> Option<u32> {
    EXCITATION_GAIN_PAIRS.iter().find(|(e, _)| *e == excitation_pct).map(|(_, g)| *g)
}

/// Acquisition metadata of one recorded waveform.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementMeta {
    /// Plate label, e.g. the impact energy `"25J"`.
    pub plate: String,
    pub tx_disc: u8,
    pub rx_disc: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_channel: Option<String>,
    pub excitation_pct: u32,
    pub gain_db: u32,
    pub n_avg: u32,
    #[serde(default)]
    pub repetition: u32,
    /// Free label separating measurement campaigns (e.g. repositioning variant `v1`).
    #[serde(default)]
    pub series: String,
}

impl MeasurementMeta {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            series: self.series.clone(),
            plate: self.plate.clone(),
            tx_disc: self.tx_disc,
            rx_disc: self.rx_disc,
            excitation_pct: self.excitation_pct,
            n_avg: self.n_avg,
            repetition: self.repetition,
        }
    }

    pub fn pair(&self) -> (u8, u8) {
        (self.tx_disc, self.rx_disc)
    }

    pub fn validate(&self, enforce_pairing: bool) -> Result<(), IngestError> {
        let invalid = |msg: String| IngestError::InvalidMeta { key: self.key(), msg };
        if self.plate.is_empty() {
            return Err(invalid("empty plate label".into()));
        }
        for disc in [self.tx_disc, self.rx_disc] {
            if !(1..=5).contains(&disc) {
                return Err(invalid(format!("disc {disc} outside 1..=5")));
            }
        }
        if self.tx_disc == self.rx_disc {
            return Err(invalid("transmitter and receiver disc must differ".into()));
        }
        if !(1..=100).contains(&self.excitation_pct) {
            return Err(invalid(format!("excitation {} % outside 1..=100", self.excitation_pct)));
        }
        if self.n_avg == 0 {
            return Err(invalid("n_avg must be at least 1".into()));
        }
        if enforce_pairing {
            let expected = expected_gain_db(self.excitation_pct)
                .ok_or_else(|| invalid(format!("excitation {} % not in the pairing table", self.excitation_pct)))?;
            if expected != self.gain_db {
                return Err(IngestError::InvalidPairing {
                    key: self.key(),
                    excitation_pct: self.excitation_pct,
                    gain_db: self.gain_db,
                    expected,
                });
            }
        }
        Ok(())
    }
}

/// Uniqueness key of a record inside a dataset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub series: String,
    pub plate: String,
    pub tx_disc: u8,
    pub rx_disc: u8,
    pub excitation_pct: u32,
    pub n_avg: u32,
    pub repetition: u32,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.series.is_empty() {
            write!(f, "{}/", self.series)?;
        }
        write!(
            f,
            "{} {}->{} {}% avg{} rep{}",
            self.plate, self.tx_disc, self.rx_disc, self.excitation_pct, self.n_avg, self.repetition
        )
    }
}

/// One measurement with its waveform loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub meta: MeasurementMeta,
    pub waveform: Arc<Waveform>,
}

impl StudyRecord {
    pub fn new(meta: MeasurementMeta, waveform: Waveform) -> Self {
        Self { meta, waveform: Arc::new(waveform) }
    }
}

/// Validated, immutable collection of records ordered by key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    records: Vec<StudyRecord>,
}

impl Dataset {
    pub fn new(records: Vec<StudyRecord>) -> Result<Self, IngestError> {
        let mut by_key = BTreeMap::new();
        for r in records {
            r.meta.validate(false)?;
            let key = r.meta.key();
            if by_key.contains_key(&key) {
                return Err(IngestError::DuplicateKey(key));
            }
            by_key.insert(key, r);
        }
        Ok(Self { records: by_key.into_values().collect() })
    }

    pub fn records(&self) -> &[StudyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn select<'a>(&'a self, pred: impl Fn(&MeasurementMeta) -> bool + 'a) -> impl Iterator<Item = &'a StudyRecord> + 'a {
        self.records.iter().filter(move |r| pred(&r.meta))
    }

    /// Plate labels in natural order (numeric prefix first, then text).
    pub fn plates(&self) -> Vec<String> {
        let mut plates: Vec<String> = self.records.iter().map(|r| r.meta.plate.clone()).collect();
        plates.sort_by(|a, b| natural_cmp(a, b));
        plates.dedup();
        plates
    }
}

/// Orders labels such as `10J`, `15J`, `100J` by their leading number.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    fn lead(s: &str) -> Option<f64> {
        let end = s
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_digit() || *c == '.'))
            .map_or(s.len(), |(i, _)| i);
        s[..end].parse().ok()
    }
    match (lead(a), lead(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}
