//! Reference implementations used as test oracles. Written from the
//! definitions, without sharing code with the library pipeline.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One-sided magnitude spectrum by direct summation, O(N^2).
pub fn naive_dft_magnitudes(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                // reduce k*i mod n first so the angle stays small and exact
                let phase = 2.0 * PI * ((k * i) % n) as f64 / n as f64;
                re += v * phase.cos();
                im -= v * phase.sin();
            }
            re.hypot(im)
        })
        .collect()
}

pub struct OracleParams {
    pub f_min: f64,
    pub f_max: f64,
    pub thr_min: f64,
    pub thr_step: f64,
    pub thr_max: f64,
    pub dc_correct: bool,
    pub zero_pad: bool,
}

pub fn oracle_thresholds(p: &OracleParams) -> Vec<f64> {
    let n = ((p.thr_max - p.thr_min) / p.thr_step + 1e-9).floor() as usize + 1;
    let mut v: Vec<f64> = (0..n).map(|i| p.thr_min + i as f64 * p.thr_step).collect();
    let last = v.last_mut().unwrap();
    if (*last - p.thr_max).abs() <= 1e-9 * p.thr_step || *last > p.thr_max {
        *last = p.thr_max;
    }
    v
}

/// Peak counts per threshold, by a linear scan over the band.
pub fn oracle_curve(samples: &[f64], rate: f64, p: &OracleParams) -> Option<(Vec<f64>, Vec<u32>)> {
    let mut x = samples.to_vec();
    if p.dc_correct {
        let first = x[0];
        x.iter_mut().for_each(|v| *v -= first);
    }
    if p.zero_pad {
        let mut n = 1;
        while n < x.len() {
            n *= 2;
        }
        x.resize(n, 0.0);
    }
    let n = x.len();
    let m = naive_dft_magnitudes(&x);
    let in_band = |k: usize| {
        let f = k as f64 * rate / n as f64;
        f >= p.f_min && f <= p.f_max
    };
    let max = (0..m.len()).filter(|&k| in_band(k)).map(|k| m[k]).fold(0.0, f64::max);
    if max <= 0.0 {
        return None;
    }
    let s: Vec<f64> = m.iter().map(|v| v / max).collect();
    let mut peak_heights = Vec::new();
    for k in 1..s.len().saturating_sub(1) {
        if !in_band(k) || s[k - 1] >= s[k] {
            continue;
        }
        let mut j = k;
        while j + 1 < s.len() && s[j + 1] == s[k] {
            j += 1;
        }
        if j + 1 < s.len() && s[j + 1] < s[k] {
            peak_heights.push(s[k]);
        }
    }
    let thresholds = oracle_thresholds(p);
    let counts = thresholds
        .iter()
        .map(|&t| peak_heights.iter().filter(|&&h| h > t).count() as u32)
        .collect();
    Some((thresholds, counts))
}

/// Random waveform: a few sinusoids, a DC offset and white noise.
pub fn random_waveform(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tones: Vec<(f64, f64, f64)> = (0..rng.random_range(1..6))
        .map(|_| (rng.random_range(0.1..2.0), rng.random_range(0.0..0.5), rng.random_range(0.0..TAU)))
        .collect();
    let dc = rng.random_range(-0.5..0.5);
    let noise = rng.random_range(0.0..0.3);
    (0..n)
        .map(|i| {
            let t = i as f64;
            dc + tones.iter().map(|(a, f, ph)| a * (2.0 * PI * f * t + ph).sin()).sum::<f64>()
                + noise * rng.random_range(-1.0..1.0)
        })
        .collect()
}
