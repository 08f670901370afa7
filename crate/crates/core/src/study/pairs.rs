use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{config_label, evaluate, pair_label, Finding, Selector, StudyError, StudyKind, StudyResult, StudyRow};
use crate::ingest::{natural_cmp, Dataset, StudyRecord};
use crate::spc::SpcParams;

/// Index for every transducer pair on every plate under one parameter set.
///
/// Series are pairs, x is the plate and statistics are grouped per plate.
/// A pair recorded on some plate but not on another is reported as absent
/// rather than failing the study. When several records share a plate and
/// pair the first by key is used.
pub fn run_pair_sweep(dataset: &Dataset, selector: &Selector, params: &SpcParams) -> Result<StudyResult, StudyError> {
    let mut cells: BTreeMap<(String, (u8, u8)), &StudyRecord> = BTreeMap::new();
    for r in dataset.select(|m| selector.matches(m)) {
        cells.entry((r.meta.plate.clone(), r.meta.pair())).or_insert(r);
    }
    if cells.is_empty() {
        return Err(StudyError::MissingRecord(vec![format!("{selector:?}")]));
    }
    let mut plates: Vec<String> = cells.keys().map(|(p, _)| p.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    plates.sort_by(|a, b| natural_cmp(a, b));
    let pairs: BTreeSet<(u8, u8)> = cells.keys().map(|(_, pair)| *pair).collect();

    let list: Vec<_> = cells.iter().collect();
    let evaluated = list
        .par_iter()
        .map(|(_, rec)| evaluate(rec, params))
        .collect::<Result<Vec<_>, _>>()?;

    let config = config_label(params);
    let rows = list
        .iter()
        .zip(evaluated)
        .map(|(((plate, pair), rec), (value, curve))| StudyRow {
            group: plate.clone(),
            series: pair_label(*pair),
            x: plate.clone(),
            config: config.clone(),
            value,
            record: Some(rec.meta.key()),
            curve,
        })
        .collect();

    let mut findings = Vec::new();
    for plate in &plates {
        for pair in &pairs {
            if !cells.contains_key(&(plate.clone(), *pair)) {
                findings.push(Finding::Absent { plate: plate.clone(), pair: pair_label(*pair) });
            }
        }
    }
    let params = BTreeMap::from([(config, *params)]);
    Ok(StudyResult::new(StudyKind::Pairs, params, rows, findings))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;

    #[test]
    fn absent_pairs_are_listed_not_fatal() {
        let ds = dataset(vec![
            (meta("10J", 1, 2, 20), tones(0.5, &[])),
            (meta("10J", 1, 4, 20), tones(0.5, &[(150, 0.3)])),
            (meta("25J", 1, 2, 20), tones(0.2, &[])),
        ]);
        let r = run_pair_sweep(&ds, &Selector::default(), &params()).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.findings, vec![Finding::Absent { plate: "25J".into(), pair: "1-4".into() }]);
        assert_eq!(r.stats["10J"].n, 2);
        assert_eq!(r.stats["25J"].n, 1);
        assert_eq!(r.stats["10J"].spread(), (r.stats["10J"].max - r.stats["10J"].min));
    }

    #[test]
    fn empty_selection_is_an_error() {
        let ds = dataset(vec![(meta("10J", 1, 2, 20), tones(0.5, &[]))]);
        let sel = Selector { excitation_pct: Some(80), ..Selector::default() };
        assert!(matches!(run_pair_sweep(&ds, &sel, &params()), Err(StudyError::MissingRecord(_))));
    }
}
