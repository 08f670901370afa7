use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{config_label, evaluate, pair_label, Finding, Selector, StudyError, StudyKind, StudyResult, StudyRow};
use crate::ingest::{Dataset, MeasurementMeta, StudyRecord};
use crate::spc::SpcParams;
use crate::stats::GroupStats;

/// How records are grouped into repetitions of one measurement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupBy {
    /// Everything but the repetition number.
    #[default]
    Condition,
    Plate,
    Pair,
    Series,
}

impl GroupBy {
    pub fn label(&self, m: &MeasurementMeta) -> String {
        match self {
            GroupBy::Condition => {
                let mut s = format!("{} {} {}% avg{}", m.plate, pair_label(m.pair()), m.excitation_pct, m.n_avg);
                if !m.series.is_empty() {
                    s = format!("{} {s}", m.series);
                }
                s
            }
            GroupBy::Plate => m.plate.clone(),
            GroupBy::Pair => pair_label(m.pair()),
            GroupBy::Series => m.series.clone(),
        }
    }
}

/// Mean, sample standard deviation and relative error per group of
/// repeated measurements. Every group needs at least two records.
pub fn run_repeatability(
    dataset: &Dataset,
    selector: &Selector,
    group_by: GroupBy,
    params: &SpcParams,
) -> Result<StudyResult, StudyError> {
    let mut groups: BTreeMap<String, Vec<&StudyRecord>> = BTreeMap::new();
    for r in dataset.select(|m| selector.matches(m)) {
        groups.entry(group_by.label(&r.meta)).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(StudyError::MissingRecord(vec![format!("{selector:?}")]));
    }
    if let Some((group, recs)) = groups.iter().find(|(_, v)| v.len() < 2) {
        return Err(StudyError::InsufficientRepetitions { group: group.clone(), n: recs.len() });
    }
    let cells: Vec<(&String, &StudyRecord)> =
        groups.iter().flat_map(|(g, recs)| recs.iter().map(move |r| (g, *r))).collect();
    let evaluated = cells.par_iter().map(|(_, r)| evaluate(r, params)).collect::<Result<Vec<_>, _>>()?;

    let config = config_label(params);
    let mut rows = Vec::with_capacity(cells.len());
    let mut values: BTreeMap<&String, Vec<f64>> = BTreeMap::new();
    for ((group, rec), (value, curve)) in cells.iter().zip(evaluated) {
        values.entry(group).or_default().push(value);
        rows.push(StudyRow {
            group: (*group).clone(),
            series: (*group).clone(),
            x: rec.meta.key().to_string(),
            config: config.clone(),
            value,
            record: Some(rec.meta.key()),
            curve,
        });
    }
    let findings = values
        .into_iter()
        .map(|(group, v)| {
            let s = GroupStats::from_values(&v);
            Finding::Repeatability {
                group: group.clone(),
                n: s.n,
                mean: s.mean,
                std: s.std,
                std_population: s.std_population,
                relative_error: s.relative_error(),
            }
        })
        .collect();
    let params = BTreeMap::from([(config, *params)]);
    Ok(StudyResult::new(StudyKind::Repeatability, params, rows, findings))
}
