//! TOML dataset manifest.
//!
//! ```toml
//! schema = 1
//! sample_rate = 12.5e6
//! n_samples = 10048          # optional, checked on load
//! enforce_pairing = true     # optional, excitation/gain table check
//!
//! [format]                   # default for records without their own
//! kind = "binary"
//! endianness = "little"
//! dtype = "i16"
//! header_bytes = 0
//! scale = 0.001
//!
//! [[record]]
//! file = "10J/tx2_rx3_20.bin"   # relative to the manifest
//! plate = "10J"
//! tx_disc = 2
//! rx_disc = 3
//! excitation_pct = 20
//! gain_db = 22
//! n_avg = 256
//! repetition = 0             # optional
//! series = "v1"              # optional
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_binary_waveform, read_csv_waveform, BinaryLayout, Dataset, IngestError, MeasurementMeta, StudyRecord};

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Binary(BinaryLayout),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub file: PathBuf,
    #[serde(flatten)]
    pub meta: MeasurementMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FileFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawManifest {
    schema: u32,
    sample_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_samples: Option<usize>,
    #[serde(default)]
    enforce_pairing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<FileFormat>,
    #[serde(default, rename = "record")]
    records: Vec<ManifestRecord>,
}

/// Validated manifest. Record file paths are resolved against the manifest
/// directory and records are sorted by key.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub sample_rate: f64,
    pub n_samples: Option<usize>,
    pub enforce_pairing: bool,
    pub default_format: Option<FileFormat>,
    pub records: Vec<ManifestRecord>,
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    DatasetManifest::parse(&text, base).map_err(|e| match e {
        IngestError::Manifest { msg, .. } => IngestError::Manifest { path: path.into(), msg },
        other => other,
    })
}

impl DatasetManifest {
    pub fn new(sample_rate: f64, default_format: FileFormat) -> Self {
        Self { sample_rate, n_samples: None, enforce_pairing: false, default_format: Some(default_format), records: Vec::new() }
    }

    /// Parse and validate manifest text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, IngestError> {
        let bad = |msg: String| IngestError::Manifest { path: PathBuf::new(), msg };
        let raw: RawManifest = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        if raw.schema != MANIFEST_SCHEMA {
            return Err(bad(format!("unsupported schema {}, expected {MANIFEST_SCHEMA}", raw.schema)));
        }
        if !(raw.sample_rate.is_finite() && raw.sample_rate > 0.0) {
            return Err(bad(format!("sample_rate must be positive, got {}", raw.sample_rate)));
        }
        let mut keys = BTreeSet::new();
        let mut records = Vec::with_capacity(raw.records.len());
        for mut rec in raw.records {
            rec.meta.validate(raw.enforce_pairing)?;
            let key = rec.meta.key();
            if !keys.insert(key.clone()) {
                return Err(IngestError::DuplicateKey(key));
            }
            if rec.format.is_none() && raw.format.is_none() {
                return Err(bad(format!("record {key} has no format and no default [format] is set")));
            }
            if rec.file.is_relative() {
                rec.file = base.join(&rec.file);
            }
            if !rec.file.is_file() {
                return Err(IngestError::MissingFile(rec.file));
            }
            records.push(rec);
        }
        records.sort_by_key(|r| r.meta.key());
        Ok(Self {
            sample_rate: raw.sample_rate,
            n_samples: raw.n_samples,
            enforce_pairing: raw.enforce_pairing,
            default_format: raw.format,
            records,
        })
    }

    pub fn format_of(&self, rec: &ManifestRecord) -> FileFormat {
        rec.format.or(self.default_format).expect("format checked on load")
    }

    /// Read every referenced waveform (in parallel) and check it against the
    /// declared rate and length.
    pub fn load_dataset(&self) -> Result<Dataset, IngestError> {
        let records: Result<Vec<StudyRecord>, IngestError> = self
            .records
            .par_iter()
            .map(|rec| {
                let waveform = match self.format_of(rec) {
                    FileFormat::Csv => read_csv_waveform(&rec.file, Some(self.sample_rate))?,
                    FileFormat::Binary(layout) => {
                        let layout = BinaryLayout { n_samples: layout.n_samples.or(self.n_samples), ..layout };
                        read_binary_waveform(&rec.file, &layout, self.sample_rate)?
                    }
                };
                if let Some(declared) = self.n_samples {
                    if waveform.len() != declared {
                        return Err(IngestError::LengthMismatch { path: rec.file.clone(), found: waveform.len(), declared });
                    }
                }
                Ok(StudyRecord::new(rec.meta.clone(), waveform))
            })
            .collect();
        Dataset::new(records?)
    }

    /// Serialize with file paths made relative to `base` where possible.
    pub fn to_toml(&self, base: &Path) -> String {
        let records = self
            .records
            .iter()
            .map(|r| ManifestRecord { file: r.file.strip_prefix(base).unwrap_or(&r.file).to_path_buf(), ..r.clone() })
            .collect();
        let raw = RawManifest {
            schema: MANIFEST_SCHEMA,
            sample_rate: self.sample_rate,
            n_samples: self.n_samples,
            enforce_pairing: self.enforce_pairing,
            format: self.default_format,
            records,
        };
        toml::to_string(&raw).expect("manifest serializes")
    }
}
