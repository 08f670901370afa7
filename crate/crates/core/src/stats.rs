//! Descriptive statistics used by the study runner.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 0 when n = 1.
    pub std: f64,
    /// Population (n) standard deviation.
    pub std_population: f64,
    pub min: f64,
    pub max: f64,
}

impl GroupStats {
    /// Two-pass statistics. Panics on an empty slice.
    pub fn from_values(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "statistics of an empty group");
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
        let std_population = (ss / n as f64).sqrt();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { n, mean, std, std_population, min, max }
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }

    /// Sample standard deviation relative to the mean.
    pub fn relative_error(&self) -> f64 {
        self.std / self.mean
    }
}

/// Kendall's tau-b between two equally long series. `None` when either
/// series is constant (or shorter than two), where tau is undefined.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => ties_x += 1,
                (_, 0) => ties_y += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (concordant + discordant + ties_x) as f64;
    let n1 = (concordant + discordant + ties_y) as f64;
    if n0 == 0.0 || n1 == 0.0 {
        return None;
    }
    Some((concordant - discordant) as f64 / (n0 * n1).sqrt())
}

/// Shape of a short series ordered by its x values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    /// Non-decreasing with at least one strict rise.
    Increasing,
    /// Non-increasing with at least one strict fall.
    Decreasing,
    /// All values equal.
    Flat,
    /// Rises and falls.
    NonMonotone,
}

pub fn classify_trend(values: &[f64]) -> Trend {
    let rises = values.windows(2).any(|w| w[1] > w[0]);
    let falls = values.windows(2).any(|w| w[1] < w[0]);
    match (rises, falls) {
        (true, false) => Trend::Increasing,
        (false, true) => Trend::Decreasing,
        (false, false) => Trend::Flat,
        (true, true) => Trend::NonMonotone,
    }
}
