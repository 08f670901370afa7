use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{config_label, evaluate, pair_label, Finding, Selector, StudyError, StudyKind, StudyResult, StudyRow};
use crate::ingest::{natural_cmp, Dataset, MeasurementMeta, StudyRecord};
use crate::spc::SpcParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReciprocityConfig {
    /// Forward direction as (tx, rx).
    pub forward: (u8, u8),
    /// Accepted `backward / forward` ratio range, inclusive.
    #[serde(default = "default_bounds")]
    pub bounds: (f64, f64),
}

fn default_bounds() -> (f64, f64) {
    (0.8, 1.25)
}

impl ReciprocityConfig {
    pub fn new(forward: (u8, u8)) -> Self {
        Self { forward, bounds: default_bounds() }
    }
}

fn swapped(m: &MeasurementMeta) -> MeasurementMeta {
    MeasurementMeta { tx_disc: m.rx_disc, rx_disc: m.tx_disc, tx_channel: m.rx_channel.clone(), rx_channel: m.tx_channel.clone(), ..m.clone() }
}

/// Compares each forward record with the record that has identical settings
/// but swapped transmitter and receiver. Any record lacking its counterpart
/// fails the study with the full list.
pub fn run_reciprocity(
    dataset: &Dataset,
    selector: &Selector,
    config: &ReciprocityConfig,
    params: &SpcParams,
) -> Result<StudyResult, StudyError> {
    let (a, b) = config.forward;
    if a == b {
        return Err(StudyError::Invalid(format!("forward pair {a}-{b} has identical discs")));
    }
    if !(config.bounds.0 > 0.0 && config.bounds.0 <= config.bounds.1) {
        return Err(StudyError::Invalid(format!("bad ratio bounds {:?}", config.bounds)));
    }
    let base = Selector { tx_disc: None, rx_disc: None, ..selector.clone() };
    let fwd: Vec<&StudyRecord> = dataset.select(|m| base.matches(m) && m.pair() == (a, b)).collect();
    let bwd: Vec<&StudyRecord> = dataset.select(|m| base.matches(m) && m.pair() == (b, a)).collect();
    let bwd_by_key: BTreeMap<_, &StudyRecord> = bwd.iter().map(|r| (swapped(&r.meta).key(), *r)).collect();
    let fwd_keys: std::collections::BTreeSet<_> = fwd.iter().map(|r| r.meta.key()).collect();

    let mut unpaired: Vec<String> = fwd
        .iter()
        .filter(|r| !bwd_by_key.contains_key(&r.meta.key()))
        .map(|r| r.meta.key().to_string())
        .collect();
    unpaired.extend(
        bwd.iter().filter(|r| !fwd_keys.contains(&swapped(&r.meta).key())).map(|r| r.meta.key().to_string()),
    );
    if !unpaired.is_empty() {
        return Err(StudyError::UnpairedRecord(unpaired));
    }
    if fwd.is_empty() {
        return Err(StudyError::MissingRecord(vec![format!("pair {}", pair_label((a, b)))]));
    }

    let couples: Vec<(&StudyRecord, &StudyRecord)> = fwd.iter().map(|r| (*r, bwd_by_key[&r.meta.key()])).collect();
    let evaluated = couples
        .par_iter()
        .map(|(f, r)| Ok((evaluate(f, params)?, evaluate(r, params)?)))
        .collect::<Result<Vec<_>, StudyError>>()?;

    let config_name = config_label(params);
    let mut rows = Vec::new();
    let mut findings = Vec::new();
    let mut ordered: Vec<usize> = (0..couples.len()).collect();
    ordered.sort_by(|&i, &j| {
        natural_cmp(&couples[i].0.meta.plate, &couples[j].0.meta.plate)
            .then_with(|| couples[i].0.meta.key().cmp(&couples[j].0.meta.key()))
    });
    for i in ordered {
        let (f, r) = couples[i];
        let ((vf, cf), (vb, cb)) = evaluated[i].clone();
        let x = cell_label(&f.meta, fwd.iter().filter(|o| o.meta.plate == f.meta.plate).count() > 1);
        for (rec, value, curve) in [(f, vf, cf), (r, vb, cb)] {
            rows.push(StudyRow {
                group: x.clone(),
                series: pair_label(rec.meta.pair()),
                x: x.clone(),
                config: config_name.clone(),
                value,
                record: Some(rec.meta.key()),
                curve,
            });
        }
        let ratio = vb / vf;
        let flagged = !(ratio >= config.bounds.0 && ratio <= config.bounds.1);
        findings.push(Finding::Reciprocity { plate: x, forward: vf, backward: vb, ratio, flagged });
    }
    let params = BTreeMap::from([(config_name, *params)]);
    Ok(StudyResult::new(StudyKind::Reciprocity, params, rows, findings))
}

/// Plate label, extended with the varying settings when a plate has several
/// forward records.
fn cell_label(m: &MeasurementMeta, detailed: bool) -> String {
    if !detailed {
        return m.plate.clone();
    }
    let mut s = m.plate.clone();
    if !m.series.is_empty() {
        s = format!("{s} {}", m.series);
    }
    format!("{s} {}% avg{} rep{}", m.excitation_pct, m.n_avg, m.repetition)
}
