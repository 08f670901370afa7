//! Robustness experiments over datasets or synthetic ensembles.
//!
//! Each study evaluates independent (record, parameter) cells in parallel
//! and collects them in input order, so results do not depend on the
//! thread schedule.

mod amplitude;
mod averaging;
mod pairs;
mod preprocess;
mod reciprocity;
mod repeatability;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{natural_cmp, MeasurementMeta, RecordKey, StudyRecord};
use crate::spc::{spc_index, SpcCurve, SpcError, SpcParams};
use crate::stats::{GroupStats, Trend};
use crate::synth::SynthError;

pub use amplitude::{run_amplitude_study, AmplitudeSource, SeriesGenerator};
pub use averaging::{run_averaging_study, AveragingConfig, AveragingSource, NoisyGenerator};
pub use pairs::run_pair_sweep;
pub use preprocess::run_preprocess_sensitivity;
pub use reciprocity::{run_reciprocity, ReciprocityConfig};
pub use repeatability::{run_repeatability, GroupBy};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("no matching record for: {}", .0.join(", "))]
    MissingRecord(Vec<String>),
    #[error("records without their reversed counterpart: {}", .0.join(", "))]
    UnpairedRecord(Vec<String>),
    #[error("group '{group}' has {n} repetition(s), need at least 2")]
    InsufficientRepetitions { group: String, n: usize },
    #[error("invalid study setup: {0}")]
    Invalid(String),
    #[error("{key}: {source}")]
    Record { key: String, source: SpcError },
    #[error(transparent)]
    Spc(#[from] SpcError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Preprocess,
    Pairs,
    Reciprocity,
    Amplitude,
    Repeatability,
    Averaging,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Preprocess => "preprocess",
            StudyKind::Pairs => "pairs",
            StudyKind::Reciprocity => "reciprocity",
            StudyKind::Amplitude => "amplitude",
            StudyKind::Repeatability => "repeatability",
            StudyKind::Averaging => "averaging",
        }
    }
}

/// Record filter; unset fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plates: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_disc: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_disc: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excitation_pct: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_db: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_avg: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition: Option<u32>,
}

impl Selector {
    /// The fixed condition of the preprocessing study: 2 -> 3, 20 %, 22 dB.
    pub fn reference_condition() -> Self {
        Self { tx_disc: Some(2), rx_disc: Some(3), excitation_pct: Some(20), gain_db: Some(22), ..Self::default() }
    }

    pub fn matches(&self, m: &MeasurementMeta) -> bool {
        fn ok<T: PartialEq>(want: &Option<T>, have: &T) -> bool {
            want.as_ref().is_none_or(|w| w == have)
        }
        ok(&self.series, &m.series)
            && self.plates.as_ref().is_none_or(|p| p.contains(&m.plate))
            && ok(&self.tx_disc, &m.tx_disc)
            && ok(&self.rx_disc, &m.rx_disc)
            && ok(&self.excitation_pct, &m.excitation_pct)
            && ok(&self.gain_db, &m.gain_db)
            && ok(&self.n_avg, &m.n_avg)
            && ok(&self.repetition, &m.repetition)
    }

    /// Same filter with the direction fields swapped.
    pub fn reversed(&self) -> Self {
        Self { tx_disc: self.rx_disc, rx_disc: self.tx_disc, ..self.clone() }
    }
}

/// One evaluated cell: an index value placed in a plot series at label `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    /// Statistics group.
    pub group: String,
    /// Line or bar series in plots.
    pub series: String,
    pub x: String,
    /// Label of the parameter set in `StudyResult::params`.
    pub config: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<RecordKey>,
    pub curve: SpcCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Finding {
    /// Two configurations order the same two groups oppositely.
    OrderingReversal {
        first: String,
        second: String,
        config_a: String,
        config_b: String,
        /// `value(second) - value(first)` under each configuration.
        delta_a: f64,
        delta_b: f64,
    },
    /// Number of distinct index values produced by the preprocessing variants.
    DistinctValues { subject: String, grid: String, distinct: usize, of: usize },
    /// Expected cell has no record.
    Absent { plate: String, pair: String },
    Reciprocity { plate: String, forward: f64, backward: f64, ratio: f64, flagged: bool },
    TrendSummary {
        series: String,
        tau: Option<f64>,
        overall: Trend,
        increasing: usize,
        decreasing: usize,
        flat: usize,
        non_monotone: usize,
        /// Both increasing and decreasing three-point subsets exist.
        contradictory: bool,
    },
    Subset { series: String, x: [String; 3], values: [f64; 3], verdict: Trend },
    Repeatability { group: String, n: usize, mean: f64, std: f64, std_population: f64, relative_error: f64 },
    Stability { series: String, n_avg: u32, value: f64, reference: f64, deviation: f64, stable: bool },
    NoiseReduction { series: String, n_avg: u32, rms: f64, expected: f64, relative_error: f64 },
}

impl Finding {
    pub fn kind(&self) -> &'static str {
        match self {
            Finding::OrderingReversal { .. } => "ordering-reversal",
            Finding::DistinctValues { .. } => "distinct-values",
            Finding::Absent { .. } => "absent",
            Finding::Reciprocity { .. } => "reciprocity",
            Finding::TrendSummary { .. } => "trend-summary",
            Finding::Subset { .. } => "subset",
            Finding::Repeatability { .. } => "repeatability",
            Finding::Stability { .. } => "stability",
            Finding::NoiseReduction { .. } => "noise-reduction",
        }
    }

    /// Whether this finding marks something a reader should look at.
    pub fn is_flagged(&self) -> bool {
        match self {
            Finding::OrderingReversal { .. } | Finding::Absent { .. } => true,
            Finding::Reciprocity { flagged, .. } => *flagged,
            Finding::TrendSummary { contradictory, .. } => *contradictory,
            Finding::Stability { stable, .. } => !stable,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub study: StudyKind,
    /// Every parameter set used, keyed by the label rows refer to.
    pub params: BTreeMap<String, SpcParams>,
    pub rows: Vec<StudyRow>,
    pub stats: BTreeMap<String, GroupStats>,
    pub findings: Vec<Finding>,
}

impl StudyResult {
    pub fn new(study: StudyKind, params: BTreeMap<String, SpcParams>, mut rows: Vec<StudyRow>, findings: Vec<Finding>) -> Self {
        rows.sort_by(|a, b| {
            natural_cmp(&a.series, &b.series)
                .then_with(|| natural_cmp(&a.x, &b.x))
                .then_with(|| a.group.cmp(&b.group))
                .then_with(|| a.config.cmp(&b.config))
        });
        let stats = group_stats(&rows);
        Self { study, params, rows, stats, findings }
    }

    /// Stats recomputed from the rows alone.
    pub fn recompute_stats(&self) -> BTreeMap<String, GroupStats> {
        group_stats(&self.rows)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.is_flagged())
    }

    /// Rows of one series in x order.
    pub fn series(&self, name: &str) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.series == name).collect()
    }

    pub fn series_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.rows.iter().map(|r| r.series.clone()).collect();
        names.dedup();
        names
    }
}

fn group_stats(rows: &[StudyRow]) -> BTreeMap<String, GroupStats> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.group.clone()).or_default().push(r.value);
    }
    groups.into_iter().map(|(g, v)| (g, GroupStats::from_values(&v))).collect()
}

/// `tx-rx` label of a disc pair.
pub fn pair_label(pair: (u8, u8)) -> String {
    format!("{}-{}", pair.0, pair.1)
}

/// Stable label of a parameter set, e.g. `dft-raw thr 0.001:0.01:1`.
pub fn config_label(params: &SpcParams) -> String {
    let g = &params.grid;
    let mut label = format!(
        "{} thr {}:{}:{}",
        params.preprocess.label(),
        crate::report::fmt6(g.thr_min()),
        crate::report::fmt6(g.thr_step()),
        crate::report::fmt6(g.thr_max())
    );
    if params.normalize != crate::waveform::NormalizeScope::Band {
        label.push_str(" norm-");
        label.push_str(params.normalize.label());
    }
    label
}

pub(crate) fn evaluate(record: &StudyRecord, params: &SpcParams) -> Result<(f64, SpcCurve), StudyError> {
    spc_index(&record.waveform, params)
        .map(|idx| (idx.value, idx.curve))
        .map_err(|source| StudyError::Record { key: record.meta.key().to_string(), source })
}

/// First record (by key) per plate among those matching `selector`.
pub(crate) fn first_per_plate<'a>(
    records: impl Iterator<Item = &'a StudyRecord>,
) -> BTreeMap<String, &'a StudyRecord> {
    let mut out: BTreeMap<String, &StudyRecord> = BTreeMap::new();
    for r in records {
        out.entry(r.meta.plate.clone()).or_insert(r);
    }
    out
}
