use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::IngestError;
use crate::waveform::Waveform;

/// Relative tolerance on every sampling interval when a time column is present.
const DT_TOLERANCE: f64 = 1e-6;

fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty())
}

/// Read a `time,voltage` or voltage-only text file.
///
/// Accepts comma or whitespace separators, `#` comment lines and one
/// optional non-numeric header line. With a time column the rate is taken
/// from the file and checked against `sample_rate_hint` when one is given.
pub fn read_csv_waveform(path: &Path, sample_rate_hint: Option<f64>) -> Result<Waveform, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let parse_err = |line: usize, msg: String| IngestError::Parse { path: path.into(), line, msg };

    let mut columns: Option<usize> = None;
    let mut times = Vec::new();
    let mut volts = Vec::new();
    let mut seen_data_line = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim().trim_start_matches('\u{feff}');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = split_fields(line).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if !seen_data_line && columns.is_none() => {
                // header line
                seen_data_line = true;
                continue;
            }
            Err(e) => return Err(parse_err(line_no, format!("{e} in '{line}'"))),
        };
        seen_data_line = true;
        match (columns, values.len()) {
            (_, 0) => continue,
            (None, n @ (1 | 2)) => columns = Some(n),
            (None, n) => return Err(parse_err(line_no, format!("expected 1 or 2 columns, found {n}"))),
            (Some(c), n) if c != n => {
                return Err(parse_err(line_no, format!("expected {c} columns, found {n}")));
            }
            _ => {}
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(parse_err(line_no, format!("non-finite value {v}")));
        }
        if values.len() == 2 {
            times.push(values[0]);
            volts.push(values[1]);
        } else {
            volts.push(values[0]);
        }
    }
    if volts.is_empty() {
        return Err(IngestError::EmptyFile { path: path.into() });
    }

    let (rate, t0) = if times.is_empty() {
        let rate = sample_rate_hint.ok_or_else(|| IngestError::MissingSampleRate { path: path.into() })?;
        (rate, 0.0)
    } else {
        let rate = uniform_rate(path, &times, sample_rate_hint)?;
        (rate, times[0])
    };
    Waveform::with_start(volts, rate, t0).map_err(|source| IngestError::Waveform { path: path.into(), source })
}

fn uniform_rate(path: &Path, times: &[f64], hint: Option<f64>) -> Result<f64, IngestError> {
    let rate = match (times.len(), hint) {
        (1, Some(h)) => return Ok(h),
        (1, None) => return Err(IngestError::MissingSampleRate { path: path.into() }),
        (n, _) => (n - 1) as f64 / (times[n - 1] - times[0]),
    };
    if !(rate.is_finite() && rate > 0.0) {
        return Err(IngestError::NonUniformSampling { path: path.into(), index: 1, dt: times[1] - times[0], expected: f64::NAN });
    }
    let rate = match hint {
        Some(h) if ((rate - h) / h).abs() > DT_TOLERANCE => {
            return Err(IngestError::RateMismatch { path: path.into(), found: rate, declared: h });
        }
        Some(h) => h,
        None => rate,
    };
    let expected = 1.0 / rate;
    for (index, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        if (dt - expected).abs() >= DT_TOLERANCE * expected {
            return Err(IngestError::NonUniformSampling { path: path.into(), index: index + 1, dt, expected });
        }
    }
    Ok(rate)
}

/// Write `time,voltage` with a header; values use shortest round-trip formatting.
pub fn write_csv_waveform(path: &Path, w: &Waveform) -> Result<(), IngestError> {
    let mut out = String::with_capacity(w.len() * 32);
    out.push_str("time,voltage\n");
    for (i, v) in w.samples().iter().enumerate() {
        let t = w.t0() + i as f64 / w.sample_rate();
        let _ = writeln!(out, "{t:e},{v:e}");
    }
    fs::write(path, out).map_err(|source| IngestError::Io { path: path.into(), source })
}
