use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    config_label, evaluate, first_per_plate, Finding, Selector, StudyError, StudyKind, StudyResult, StudyRow,
};
use crate::ingest::{natural_cmp, Dataset, StudyRecord};
use crate::spc::{FrequencyBand, SpcParams, ThresholdGrid};
use crate::waveform::{NormalizeScope, PreprocessOptions};

/// Every preprocessing variant x grid on one record per plate.
///
/// Rows are bar-chart data: one series per configuration, x = plate.
/// Configurations that differ in exactly one factor (DC correction, zero
/// padding or grid) are compared for plate pairs whose order flips.
pub fn run_preprocess_sensitivity(
    dataset: &Dataset,
    selector: &Selector,
    band: FrequencyBand,
    grids: &[ThresholdGrid],
    normalize: NormalizeScope,
) -> Result<StudyResult, StudyError> {
    if grids.is_empty() {
        return Err(StudyError::Invalid("at least one threshold grid is required".into()));
    }
    let plates = selector.plates.clone().unwrap_or_else(|| dataset.plates());
    let chosen = first_per_plate(dataset.select(|m| selector.matches(m)));
    let missing: Vec<String> = plates.iter().filter(|p| !chosen.contains_key(*p)).cloned().collect();
    if !missing.is_empty() {
        return Err(StudyError::MissingRecord(missing));
    }
    let records: Vec<&StudyRecord> = plates.iter().map(|p| chosen[p]).collect();

    let configs: Vec<(usize, usize, SpcParams)> = PreprocessOptions::ALL
        .iter()
        .enumerate()
        .flat_map(|(vi, &pre)| {
            grids.iter().enumerate().map(move |(gi, &grid)| {
                (vi, gi, SpcParams { band, grid, preprocess: pre, normalize })
            })
        })
        .collect();
    let cells: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..records.len()).map(move |r| (c, r))).collect();
    let evaluated = cells
        .par_iter()
        .map(|&(c, r)| evaluate(records[r], &configs[c].2))
        .collect::<Result<Vec<_>, _>>()?;

    let labels: Vec<String> = configs.iter().map(|c| config_label(&c.2)).collect();
    let mut values = vec![vec![0.0; records.len()]; configs.len()];
    let mut rows = Vec::with_capacity(cells.len());
    for (&(c, r), (value, curve)) in cells.iter().zip(evaluated) {
        values[c][r] = value;
        rows.push(StudyRow {
            group: labels[c].clone(),
            series: labels[c].clone(),
            x: plates[r].clone(),
            config: labels[c].clone(),
            value,
            record: Some(records[r].meta.key()),
            curve,
        });
    }

    let mut findings = Vec::new();
    for (gi, grid) in grids.iter().enumerate() {
        let grid_label = config_label(&SpcParams { band, grid: *grid, preprocess: PreprocessOptions::default(), normalize })
            .split_once(' ')
            .map(|(_, g)| g.to_string())
            .unwrap_or_default();
        for (r, plate) in plates.iter().enumerate() {
            let mut vs: Vec<u64> = configs
                .iter()
                .enumerate()
                .filter(|(_, c)| c.1 == gi)
                .map(|(ci, _)| values[ci][r].to_bits())
                .collect();
            let of = vs.len();
            vs.sort_unstable();
            vs.dedup();
            findings.push(Finding::DistinctValues { subject: plate.clone(), grid: grid_label.clone(), distinct: vs.len(), of });
        }
    }

    let mut order: Vec<usize> = (0..plates.len()).collect();
    order.sort_by(|&a, &b| natural_cmp(&plates[a], &plates[b]));
    for a in 0..configs.len() {
        for b in a + 1..configs.len() {
            if !one_factor_apart(&configs[a], &configs[b]) {
                continue;
            }
            for (i, &p) in order.iter().enumerate() {
                for &q in &order[i + 1..] {
                    let delta_a = values[a][q] - values[a][p];
                    let delta_b = values[b][q] - values[b][p];
                    if delta_a * delta_b < 0.0 {
                        findings.push(Finding::OrderingReversal {
                            first: plates[p].clone(),
                            second: plates[q].clone(),
                            config_a: labels[a].clone(),
                            config_b: labels[b].clone(),
                            delta_a,
                            delta_b,
                        });
                    }
                }
            }
        }
    }

    let params: BTreeMap<String, SpcParams> = labels.into_iter().zip(configs.into_iter().map(|c| c.2)).collect();
    Ok(StudyResult::new(StudyKind::Preprocess, params, rows, findings))
}

fn one_factor_apart(a: &(usize, usize, SpcParams), b: &(usize, usize, SpcParams)) -> bool {
    let (pa, pb) = (a.2.preprocess, b.2.preprocess);
    let diffs = usize::from(pa.dc_correct != pb.dc_correct)
        + usize::from(pa.zero_pad != pb.zero_pad)
        + usize::from(a.1 != b.1);
    diffs == 1
}
