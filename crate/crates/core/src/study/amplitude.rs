use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{config_label, evaluate, pair_label, Finding, Selector, StudyError, StudyKind, StudyResult, StudyRow};
use crate::ingest::{Dataset, MeasurementMeta, StudyRecord};
use crate::report::fmt6;
use crate::spc::{spc_index, SpcParams};
use crate::stats::{classify_trend, kendall_tau_b, Trend};
use crate::synth::SynthError;
use crate::waveform::Waveform;

/// Named waveform generator parameterised by excitation amplitude.
pub struct SeriesGenerator<'a> {
    pub name: String,
    pub generate: Box<dyn Fn(f64) -> Result<Waveform, SynthError> + Sync + 'a>,
}

impl<'a> SeriesGenerator<'a> {
    pub fn new(name: impl Into<String>, generate: impl Fn(f64) -> Result<Waveform, SynthError> + Sync + 'a) -> Self {
        Self { name: name.into(), generate: Box::new(generate) }
    }
}

pub enum AmplitudeSource<'a> {
    /// Records grouped by plate and pair, x = excitation percentage.
    /// `excitations` restricts the levels used.
    Dataset { dataset: &'a Dataset, selector: &'a Selector, excitations: Option<Vec<u32>> },
    /// Each generator evaluated at every amplitude.
    Generators { series: Vec<SeriesGenerator<'a>>, amplitudes: Vec<f64> },
}

struct Cell<'a> {
    series: String,
    amplitude: f64,
    x: String,
    record: Option<&'a StudyRecord>,
    generator: Option<usize>,
}

/// Index vs excitation amplitude, with a Kendall tau per series and a
/// trend class for every three-level subset of each series.
pub fn run_amplitude_study(source: &AmplitudeSource<'_>, params: &SpcParams) -> Result<StudyResult, StudyError> {
    let cells = match source {
        AmplitudeSource::Dataset { dataset, selector, excitations } => dataset_cells(dataset, selector, excitations.as_deref())?,
        AmplitudeSource::Generators { series, amplitudes } => {
            if series.is_empty() || amplitudes.is_empty() {
                return Err(StudyError::Invalid("need at least one generator and one amplitude".into()));
            }
            let mut sorted = amplitudes.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            series
                .iter()
                .enumerate()
                .flat_map(|(gi, g)| {
                    sorted.iter().map(move |&a| Cell {
                        series: g.name.clone(),
                        amplitude: a,
                        x: fmt6(a),
                        record: None,
                        generator: Some(gi),
                    })
                })
                .collect()
        }
    };

    let evaluated = cells
        .par_iter()
        .map(|c| match (c.record, c.generator, source) {
            (Some(rec), _, _) => evaluate(rec, params),
            (None, Some(gi), AmplitudeSource::Generators { series, .. }) => {
                let w = (series[gi].generate)(c.amplitude)?;
                spc_index(&w, params)
                    .map(|i| (i.value, i.curve))
                    .map_err(|source| StudyError::Record { key: format!("{} @ {}", c.series, c.x), source })
            }
            _ => unreachable!("cell without a source"),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let config = config_label(params);
    let mut by_series: BTreeMap<String, Vec<(f64, String, f64)>> = BTreeMap::new();
    let mut rows = Vec::with_capacity(cells.len());
    for (c, (value, curve)) in cells.iter().zip(evaluated) {
        by_series.entry(c.series.clone()).or_default().push((c.amplitude, c.x.clone(), value));
        rows.push(StudyRow {
            group: c.series.clone(),
            series: c.series.clone(),
            x: c.x.clone(),
            config: config.clone(),
            value,
            record: c.record.map(|r| r.meta.key()),
            curve,
        });
    }

    let mut findings = Vec::new();
    for (name, mut pts) in by_series {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let amps: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let vals: Vec<f64> = pts.iter().map(|p| p.2).collect();
        let mut counts = BTreeMap::<Trend, usize>::new();
        let mut subsets = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                for k in j + 1..pts.len() {
                    let values = [vals[i], vals[j], vals[k]];
                    let verdict = classify_trend(&values);
                    *counts.entry(verdict).or_default() += 1;
                    subsets.push(Finding::Subset {
                        series: name.clone(),
                        x: [pts[i].1.clone(), pts[j].1.clone(), pts[k].1.clone()],
                        values,
                        verdict,
                    });
                }
            }
        }
        let count = |t| counts.get(&t).copied().unwrap_or(0);
        findings.push(Finding::TrendSummary {
            series: name.clone(),
            tau: if pts.len() >= 2 { kendall_tau_b(&amps, &vals) } else { None },
            overall: classify_trend(&vals),
            increasing: count(Trend::Increasing),
            decreasing: count(Trend::Decreasing),
            flat: count(Trend::Flat),
            non_monotone: count(Trend::NonMonotone),
            contradictory: count(Trend::Increasing) > 0 && count(Trend::Decreasing) > 0,
        });
        findings.extend(subsets);
    }
    let params = BTreeMap::from([(config, *params)]);
    Ok(StudyResult::new(StudyKind::Amplitude, params, rows, findings))
}

fn dataset_cells<'a>(
    dataset: &'a Dataset,
    selector: &Selector,
    excitations: Option<&[u32]>,
) -> Result<Vec<Cell<'a>>, StudyError> {
    let records: Vec<&StudyRecord> = dataset
        .records()
        .iter()
        .filter(|r| selector.matches(&r.meta) && excitations.is_none_or(|e| e.contains(&r.meta.excitation_pct)))
        .collect();
    if records.is_empty() {
        return Err(StudyError::MissingRecord(vec![format!("{selector:?}")]));
    }
    let varies = |f: fn(&MeasurementMeta) -> u32| records.iter().map(|r| f(&r.meta)).collect::<BTreeSet<_>>().len() > 1;
    let (rep_varies, avg_varies) = (varies(|m| m.repetition), varies(|m| m.n_avg));
    let mut seen = BTreeSet::new();
    let mut cells = Vec::new();
    for r in records {
        let m = &r.meta;
        let mut series = format!("{} {}", m.plate, pair_label(m.pair()));
        if !m.series.is_empty() {
            series = format!("{} {series}", m.series);
        }
        if avg_varies {
            series.push_str(&format!(" avg{}", m.n_avg));
        }
        if rep_varies {
            series.push_str(&format!(" rep{}", m.repetition));
        }
        // Gains other than the paired one would make two cells share an x.
        if !seen.insert((series.clone(), m.excitation_pct)) {
            return Err(StudyError::Invalid(format!("several records for {series} at {}%", m.excitation_pct)));
        }
        cells.push(Cell {
            series,
            amplitude: f64::from(m.excitation_pct),
            x: m.excitation_pct.to_string(),
            record: Some(r),
            generator: None,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    #[test]
    fn subsets_of_five_levels() {
        // index follows the number of extra lines: 2, 5, 3, 4, 2 peaks
        let extras: [&[(usize, f64)]; 5] = [
            &[],
            &[(150, 0.6), (200, 0.6), (250, 0.6)],
            &[(150, 0.6)],
            &[(150, 0.6), (200, 0.6)],
            &[],
        ];
        let levels = [5, 10, 20, 40, 80];
        let ds = dataset(
            levels.iter().zip(extras).map(|(&p, e)| (meta("10J", 2, 3, p), tones(0.6, e))).collect(),
        );
        let src = AmplitudeSource::Dataset { dataset: &ds, selector: &Selector::default(), excitations: None };
        let r = run_amplitude_study(&src, &params()).unwrap();
        let subsets = r.findings.iter().filter(|f| matches!(f, Finding::Subset { .. })).count();
        assert_eq!(subsets, 10);
        match &r.findings[0] {
            Finding::TrendSummary { series, tau, overall, increasing, decreasing, contradictory, .. } => {
                assert_eq!(series, "10J 2-3");
                assert_eq!(*overall, Trend::NonMonotone);
                assert!(*increasing > 0 && *decreasing > 0 && *contradictory);
                assert!(tau.is_some());
            }
            other => panic!("{other:?}"),
        }
        let xs: Vec<&str> = r.rows.iter().map(|r| r.x.as_str()).collect();
        assert_eq!(xs, vec!["5", "10", "20", "40", "80"]);
    }

    #[test]
    fn generator_series() {
        let g = SeriesGenerator::new("lin", |a| Ok(tones(0.5, &[]).scaled(a)));
        let src = AmplitudeSource::Generators { series: vec![g], amplitudes: vec![2.0, 1.0, 0.5] };
        let r = run_amplitude_study(&src, &params()).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.value == r.rows[0].value));
        match &r.findings[0] {
            Finding::TrendSummary { tau, overall, flat, .. } => {
                assert_eq!(*tau, None);
                assert_eq!(*overall, Trend::Flat);
                assert_eq!(*flat, 1);
            }
            other => panic!("{other:?}"),
        }
    }
}
