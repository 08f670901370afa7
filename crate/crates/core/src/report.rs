//! CSV, JSON and gnuplot-table output for study results.
//!
//! Output is a pure function of the result: maps are ordered, floats are
//! printed with six significant digits and rows keep their sorted order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::ingest::natural_cmp;
use crate::spc::SpcParams;
use crate::study::{Finding, StudyResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Plot,
}

impl FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plot" | "gnuplot" => Ok(Self::Plot),
            other => Err(format!("unknown report format '{other}' (csv, json, plot)")),
        }
    }
}

/// `%.6g`-style formatting.
pub fn fmt6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Value rounded to six significant digits.
pub fn round6(v: f64) -> f64 {
    if v.is_finite() {
        fmt6(v).parse().unwrap_or(v)
    } else {
        v
    }
}

/// Round every float in a JSON tree to six significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round6(n.as_f64().unwrap_or(0.0));
            *v = serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Parameter provenance block shared by every output format.
pub fn params_json(params: &SpcParams) -> Value {
    let mut v = json!({
        "f_min": params.band.f_min(),
        "f_max": params.band.f_max(),
        "thr_min": params.grid.thr_min(),
        "thr_step": params.grid.thr_step(),
        "thr_max": params.grid.thr_max(),
        "n_thr": params.grid.len(),
        "dc_correct": params.preprocess.dc_correct,
        "zero_pad": params.preprocess.zero_pad,
        "normalize": params.normalize.label(),
    });
    round_json(&mut v);
    v
}

pub fn render_json(result: &StudyResult) -> Result<String, ReportError> {
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|r| {
            json!({
                "series": r.series,
                "x": r.x,
                "group": r.group,
                "config": r.config,
                "spc_i": r.value,
                "record": r.record.as_ref().map(|k| k.to_string()),
                "curve": {
                    "thresholds": r.curve.thresholds(),
                    "counts": r.curve.counts(),
                },
            })
        })
        .collect();
    let params: serde_json::Map<String, Value> =
        result.params.iter().map(|(k, p)| (k.clone(), params_json(p))).collect();
    let mut doc = json!({
        "schema": 1,
        "study": result.study.name(),
        "params": params,
        "rows": rows,
        "stats": serde_json::to_value(&result.stats)?,
        "findings": serde_json::to_value(&result.findings)?,
    });
    round_json(&mut doc);
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<(), csv::Error>) -> Result<String, ReportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_rows_csv(result: &StudyResult) -> Result<String, ReportError> {
    csv_string(|w| {
        w.write_record(["series", "x", "group", "config", "spc_i", "record"])?;
        for r in &result.rows {
            let record = r.record.as_ref().map(|k| k.to_string()).unwrap_or_default();
            w.write_record([&r.series, &r.x, &r.group, &r.config, &fmt6(r.value), &record])?;
        }
        Ok(())
    })
}

pub fn render_stats_csv(result: &StudyResult) -> Result<String, ReportError> {
    csv_string(|w| {
        w.write_record(["group", "n", "mean", "std", "std_population", "min", "max"])?;
        for (g, s) in &result.stats {
            w.write_record([
                g.clone(),
                s.n.to_string(),
                fmt6(s.mean),
                fmt6(s.std),
                fmt6(s.std_population),
                fmt6(s.min),
                fmt6(s.max),
            ])?;
        }
        Ok(())
    })
}

pub fn render_findings_csv(result: &StudyResult) -> Result<String, ReportError> {
    let details = result
        .findings
        .iter()
        .map(|f| {
            let mut v = serde_json::to_value(f)?;
            round_json(&mut v);
            if let Value::Object(m) = &mut v {
                m.remove("kind");
            }
            Ok(serde_json::to_string(&v)?)
        })
        .collect::<Result<Vec<String>, ReportError>>()?;
    csv_string(|w| {
        w.write_record(["kind", "flagged", "detail"])?;
        for (f, d) in result.findings.iter().zip(&details) {
            w.write_record([f.kind(), if f.is_flagged() { "true" } else { "false" }, d])?;
        }
        Ok(())
    })
}

pub fn render_params_csv(result: &StudyResult) -> Result<String, ReportError> {
    csv_string(|w| {
        w.write_record([
            "config", "f_min", "f_max", "thr_min", "thr_step", "thr_max", "n_thr", "dc_correct", "zero_pad", "normalize",
        ])?;
        for (label, p) in &result.params {
            w.write_record([
                label.clone(),
                fmt6(p.band.f_min()),
                fmt6(p.band.f_max()),
                fmt6(p.grid.thr_min()),
                fmt6(p.grid.thr_step()),
                fmt6(p.grid.thr_max()),
                p.grid.len().to_string(),
                p.preprocess.dc_correct.to_string(),
                p.preprocess.zero_pad.to_string(),
                p.normalize.label().to_string(),
            ])?;
        }
        Ok(())
    })
}

/// gnuplot data file: one block per series separated by two blank lines,
/// columns `x_index x_label spc_i`. The x index is shared across series.
pub fn render_plot(result: &StudyResult) -> String {
    let mut xs: Vec<&str> = result.rows.iter().map(|r| r.x.as_str()).collect();
    xs.sort_by(|a, b| natural_cmp(a, b));
    xs.dedup();
    let mut out = String::new();
    let _ = writeln!(out, "# study: {}", result.study.name());
    for (label, p) in &result.params {
        let _ = writeln!(out, "# config {label}: {}", params_json(p));
    }
    out.push_str("# columns: x_index x_label spc_i\n");
    for (i, name) in result.series_names().iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# series: {name}");
        for r in result.series(name) {
            let idx = xs.binary_search_by(|x| natural_cmp(x, &r.x)).unwrap_or(0);
            let _ = writeln!(out, "{idx} \"{}\" {}", r.x.replace('"', "'"), fmt6(r.value));
        }
    }
    out
}

fn write_file(path: PathBuf, text: &str) -> Result<PathBuf, ReportError> {
    std::fs::write(&path, text).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Write the result under `dir` as `stem.*`; returns the files written.
pub fn emit_report(result: &StudyResult, format: ReportFormat, dir: &Path, stem: &str) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.to_path_buf(), source })?;
    let file = |suffix: &str| dir.join(format!("{stem}{suffix}"));
    match format {
        ReportFormat::Json => Ok(vec![write_file(file(".json"), &render_json(result)?)?]),
        ReportFormat::Plot => Ok(vec![write_file(file(".dat"), &render_plot(result))?]),
        ReportFormat::Csv => Ok(vec![
            write_file(file(".csv"), &render_rows_csv(result)?)?,
            write_file(file("_stats.csv"), &render_stats_csv(result)?)?,
            write_file(file("_findings.csv"), &render_findings_csv(result)?)?,
            write_file(file("_params.csv"), &render_params_csv(result)?)?,
        ]),
    }
}

/// Findings that flag something, one line each, for terminal output.
pub fn flagged_summary(result: &StudyResult) -> Vec<String> {
    result
        .flagged()
        .map(|f: &Finding| {
            let mut v = serde_json::to_value(f).unwrap_or(Value::Null);
            round_json(&mut v);
            if let Value::Object(m) = &mut v {
                m.remove("kind");
            }
            format!("{}: {}", f.kind(), v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::study::{StudyKind, StudyResult};

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt6(11.37), "11.37");
        assert_eq!(fmt6(53.7), "53.7");
        assert_eq!(fmt6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt6(2.0 / 3.0 * 1e6), "666667");
        assert_eq!(fmt6(1234567.0), "1.23457e+06");
        assert_eq!(fmt6(0.0001), "0.0001");
        assert_eq!(fmt6(0.00001234567), "1.23457e-05");
        assert_eq!(fmt6(-0.5), "-0.5");
        assert_eq!(fmt6(100.0), "100");
        assert_eq!(fmt6(999999.5), "1e+06");
        assert_eq!(round6(0.1 + 0.2), 0.3);
    }

    #[test]
    fn empty_result_gives_headers_only() {
        let r = StudyResult::new(StudyKind::Pairs, BTreeMap::new(), vec![], vec![]);
        assert_eq!(render_rows_csv(&r).unwrap(), "series,x,group,config,spc_i,record\n");
        assert_eq!(render_stats_csv(&r).unwrap(), "group,n,mean,std,std_population,min,max\n");
        assert_eq!(render_findings_csv(&r).unwrap(), "kind,flagged,detail\n");
        let json: Value = serde_json::from_str(&render_json(&r).unwrap()).unwrap();
        assert_eq!(json["rows"], json!([]));
        assert_eq!(json["schema"], 1);
        assert!(render_plot(&r).starts_with("# study: pairs\n"));
    }

    #[test]
    fn format_names() {
        assert_eq!("plot".parse::<ReportFormat>().unwrap(), ReportFormat::Plot);
        assert!("xlsx".parse::<ReportFormat>().is_err());
    }
}
