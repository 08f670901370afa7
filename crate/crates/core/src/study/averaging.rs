use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{config_label, evaluate, pair_label, Finding, Selector, StudyError, StudyKind, StudyResult, StudyRow};
use crate::ingest::{Dataset, StudyRecord};
use crate::spc::{spc_index, SpcCurve, SpcParams};
use crate::synth::NoiseSource;
use crate::waveform::Waveform;

/// Clean waveform plus independent noise realizations, one per ChaCha stream.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyGenerator {
    pub clean: Waveform,
    pub noise_rms: f64,
    pub seed: u64,
}

impl NoisyGenerator {
    /// Averages of the first `n` realizations for every `n` in `ladder`
    /// (ascending). Realizations are shared, so larger averages contain the
    /// smaller ones.
    pub fn averages(&self, ladder: &[u32]) -> Vec<Waveform> {
        let n_max = ladder.iter().copied().max().unwrap_or(0) as u64;
        let len = self.clean.len();
        let noise: Vec<Vec<f64>> = (0..n_max)
            .into_par_iter()
            .map(|j| NoiseSource::new(self.seed).with_stream(j).samples(len, self.noise_rms))
            .collect();
        let mut sum = vec![0.0; len];
        let mut used = 0u64;
        let mut out = Vec::with_capacity(ladder.len());
        for &n in ladder {
            while used < u64::from(n) {
                for (s, z) in sum.iter_mut().zip(&noise[used as usize]) {
                    *s += z;
                }
                used += 1;
            }
            let samples = self.clean.samples().iter().zip(&sum).map(|(c, s)| c + s / f64::from(n)).collect();
            out.push(Waveform::with_start(samples, self.clean.sample_rate(), self.clean.t0()).expect("finite average"));
        }
        out
    }
}

pub enum AveragingSource<'a> {
    Generator(NoisyGenerator),
    /// Records that differ only in their averaging count.
    Dataset { dataset: &'a Dataset, selector: &'a Selector },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingConfig {
    /// Averaging counts evaluated by the generator source.
    #[serde(default)]
    pub n_avg: Vec<u32>,
    /// Counts at or above this are checked against the largest count.
    #[serde(default = "default_stable_from")]
    pub stable_from: u32,
    /// Largest accepted absolute index deviation from the reference.
    pub tolerance: f64,
}

fn default_stable_from() -> u32 {
    32
}

/// Index vs averaging count, with a stability check against the largest
/// count and, for the generator source, the residual noise vs `1/sqrt(N)`.
pub fn run_averaging_study(
    source: &AveragingSource<'_>,
    config: &AveragingConfig,
    params: &SpcParams,
) -> Result<StudyResult, StudyError> {
    // negated so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(config.tolerance >= 0.0) {
        return Err(StudyError::Invalid(format!("tolerance must be non-negative, got {}", config.tolerance)));
    }
    // (series, n_avg, value, curve, record)
    type Point = (String, u32, f64, SpcCurve, Option<crate::ingest::RecordKey>);
    let mut points: Vec<Point> = Vec::new();
    let mut findings = Vec::new();
    match source {
        AveragingSource::Generator(g) => {
            let mut ladder = config.n_avg.clone();
            ladder.sort_unstable();
            ladder.dedup();
            if ladder.is_empty() || ladder[0] == 0 {
                return Err(StudyError::Invalid("averaging counts must be non-empty and positive".into()));
            }
            let averages = g.averages(&ladder);
            let evaluated = averages
                .par_iter()
                .zip(&ladder)
                .map(|(w, n)| {
                    spc_index(w, params)
                        .map(|i| (i.value, i.curve))
                        .map_err(|source| StudyError::Record { key: format!("N_av {n}"), source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            for ((w, &n), (value, curve)) in averages.iter().zip(&ladder).zip(evaluated) {
                let residual = w.samples().iter().zip(g.clean.samples()).map(|(a, c)| (a - c) * (a - c)).sum::<f64>();
                let rms = (residual / w.len() as f64).sqrt();
                let expected = g.noise_rms / f64::from(n).sqrt();
                let relative_error = if expected > 0.0 { (rms - expected) / expected } else { rms };
                findings.push(Finding::NoiseReduction { series: "synthetic".into(), n_avg: n, rms, expected, relative_error });
                points.push(("synthetic".into(), n, value, curve, None));
            }
        }
        AveragingSource::Dataset { dataset, selector } => {
            let mut groups: BTreeMap<String, Vec<&StudyRecord>> = BTreeMap::new();
            for r in dataset.select(|m| selector.matches(m)) {
                let m = &r.meta;
                let mut label = format!("{} {} {}% rep{}", m.plate, pair_label(m.pair()), m.excitation_pct, m.repetition);
                if !m.series.is_empty() {
                    label = format!("{} {label}", m.series);
                }
                groups.entry(label).or_default().push(r);
            }
            if groups.is_empty() {
                return Err(StudyError::MissingRecord(vec![format!("{selector:?}")]));
            }
            let cells: Vec<(&String, &StudyRecord)> =
                groups.iter().flat_map(|(g, v)| v.iter().map(move |r| (g, *r))).collect();
            let evaluated = cells.par_iter().map(|(_, r)| evaluate(r, params)).collect::<Result<Vec<_>, _>>()?;
            for ((g, r), (value, curve)) in cells.iter().zip(evaluated) {
                points.push(((*g).clone(), r.meta.n_avg, value, curve, Some(r.meta.key())));
            }
        }
    }

    let mut by_series: BTreeMap<&str, Vec<(u32, f64)>> = BTreeMap::new();
    for p in &points {
        by_series.entry(&p.0).or_default().push((p.1, p.2));
    }
    for (series, mut pts) in by_series {
        pts.sort_by_key(|p| p.0);
        let &(n_ref, reference) = pts.last().expect("non-empty series");
        for &(n_avg, value) in pts.iter().filter(|p| p.0 >= config.stable_from && p.0 < n_ref) {
            let deviation = (value - reference).abs();
            findings.push(Finding::Stability {
                series: series.to_string(),
                n_avg,
                value,
                reference,
                deviation,
                stable: deviation <= config.tolerance,
            });
        }
    }

    let config_name = config_label(params);
    let rows = points
        .into_iter()
        .map(|(series, n, value, curve, record)| StudyRow {
            group: series.clone(),
            series,
            x: n.to_string(),
            config: config_name.clone(),
            value,
            record,
            curve,
        })
        .collect();
    let params = BTreeMap::from([(config_name, *params)]);
    Ok(StudyResult::new(StudyKind::Averaging, params, rows, findings))
}
