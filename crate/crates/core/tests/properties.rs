mod common;

use common::random_waveform;
use proptest::prelude::*;
use spc_core::synth::{
    exact_bin_frequency, hertzian_mix_waveform, quadratic_mix_waveform, HertzianMixSpec, QuadraticMixSpec, Tone,
};
use spc_core::{
    magnitude_spectrum, spc_index, FrequencyBand, NormalizeScope, PreprocessOptions, SpcParams, ThresholdGrid, Waveform,
};

const RATE: f64 = 12.5e6;
const N: usize = 10000;
const K1: usize = 40;
const K2: usize = 240;

fn tones() -> Vec<Tone> {
    vec![Tone { c: 1.0, f: exact_bin_frequency(K1, RATE, N) }, Tone { c: 1.0, f: exact_bin_frequency(K2, RATE, N) }]
}

fn qmix(e1: f64, amplitude: f64) -> Waveform {
    quadratic_mix_waveform(&QuadraticMixSpec {
        e0: 1.0,
        e1,
        amplitude,
        tones: tones(),
        duration: N as f64 / RATE,
        sample_rate: RATE,
    })
    .unwrap()
}

fn hmix(h1: f64, amplitude: f64) -> Waveform {
    hertzian_mix_waveform(&HertzianMixSpec {
        e0: 1.0,
        h1,
        amplitude,
        exponent: 1.5,
        tones: tones(),
        duration: N as f64 / RATE,
        sample_rate: RATE,
    })
    .unwrap()
}

fn params(f_min: f64, f_max: f64, normalize: NormalizeScope) -> SpcParams {
    SpcParams {
        band: FrequencyBand::new(f_min, f_max).unwrap(),
        grid: ThresholdGrid::new(0.001, 0.01, 1.0).unwrap(),
        preprocess: PreprocessOptions::default(),
        normalize,
    }
}

fn bin_freq(k: usize) -> f64 {
    exact_bin_frequency(k, RATE, N)
}

#[test]
fn scaling_duality_is_bit_identical() {
    let p = params(10e3, 700e3, NormalizeScope::Band);
    let (e, a) = (0.05, 1.0);
    for alpha in [0.5, 2.0, 4.0] {
        let lhs = spc_index(&qmix(alpha * e, a), &p).unwrap();
        let rhs = spc_index(&qmix(e, alpha * a), &p).unwrap();
        assert_eq!(lhs.curve, rhs.curve, "alpha {alpha}");
        assert_eq!(lhs.value.to_bits(), rhs.value.to_bits());
    }
}

/// Analytic line amplitudes of the two-tone quadratic law, one entry per bin.
fn quadratic_lines(e1: f64, a: f64) -> Vec<(usize, f64)> {
    vec![
        (K1, a),
        (K2, a),
        (2 * K1, e1 * a * a / 2.0),
        (2 * K2, e1 * a * a / 2.0),
        (K2 - K1, e1 * a * a),
        (K1 + K2, e1 * a * a),
    ]
}

#[test]
fn quadratic_curve_matches_analytic_lines_and_rises_with_amplitude() {
    let p = params(10e3, 700e3, NormalizeScope::Band);
    let e1 = 0.05;
    let mut values = Vec::new();
    for a in [1.0, 2.0, 4.0, 8.0] {
        let idx = spc_index(&qmix(e1, a), &p).unwrap();
        let lines = quadratic_lines(e1, a);
        let max = lines.iter().map(|l| l.1).fold(0.0, f64::max);
        let expected: Vec<u32> = p
            .grid
            .values()
            .iter()
            .map(|&t| lines.iter().filter(|l| l.1 / max > t).count() as u32)
            .collect();
        assert_eq!(idx.curve.counts(), expected.as_slice(), "A = {a}");
        values.push(idx.value);
    }
    assert!(values.windows(2).all(|w| w[1] >= w[0]), "{values:?}");
    let amps = [1.0, 2.0, 4.0, 8.0];
    assert!(spc_core::stats::kendall_tau_b(&amps, &values).unwrap() >= 0.0);
}

#[test]
fn linear_limit_has_no_peaks_outside_primaries() {
    // bins 41..239 hold no primary; normalising by the full spectrum keeps
    // round-off far below every threshold
    let p = params(bin_freq(60), bin_freq(200), NormalizeScope::Full);
    for w in [qmix(0.0, 1.0), qmix(0.0, 7.5), hmix(0.0, 1.0), hmix(0.0, 3.0)] {
        let idx = spc_index(&w, &p).unwrap();
        assert!(idx.curve.counts().iter().all(|&c| c == 0));
        assert_eq!(idx.value, 0.0);
    }
}

fn normalized_line(w: &Waveform, k: usize) -> f64 {
    let s = magnitude_spectrum(w);
    let max = s.magnitudes().iter().copied().fold(0.0, f64::max);
    s.magnitudes()[k] / max
}

#[test]
fn hertzian_sideband_scales_with_square_root_of_amplitude() {
    let ratio = normalized_line(&hmix(0.01, 4.0), K1 + K2) / normalized_line(&hmix(0.01, 1.0), K1 + K2);
    assert!((ratio - 2.0).abs() < 1e-6, "ratio {ratio}");
}

#[test]
fn quadratic_sideband_scales_linearly_with_amplitude() {
    let ratio = normalized_line(&qmix(0.01, 2.0), K1 + K2) / normalized_line(&qmix(0.01, 1.0), K1 + K2);
    assert!((ratio - 2.0).abs() < 1e-9, "ratio {ratio}");
}

#[test]
fn dc_and_padding_are_noops_on_zero_dc_power_of_two_input() {
    let samples: Vec<f64> = (0..4096).map(|i| (i as f64 * 0.37).sin() + 0.3 * (i as f64 * 1.91).sin()).collect();
    let mut w = samples;
    w[0] = 0.0;
    let w = Waveform::new(w, 1e6).unwrap();
    let base = SpcParams::new(
        FrequencyBand::new(1e3, 450e3).unwrap(),
        ThresholdGrid::new(0.001, 0.01, 1.0).unwrap(),
        PreprocessOptions::default(),
    );
    let reference = spc_index(&w, &base).unwrap();
    for pre in PreprocessOptions::ALL {
        let idx = spc_index(&w, &SpcParams { preprocess: pre, ..base }).unwrap();
        assert_eq!(idx.curve, reference.curve, "{}", pre.label());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn index_is_amplitude_invariant(
        seed in any::<u64>(),
        n in 64usize..=4096,
        log_alpha in -6.0f64..6.0,
        dc_correct in any::<bool>(),
        zero_pad in any::<bool>(),
    ) {
        let w = Waveform::new(random_waveform(seed, n), 1e6).unwrap();
        let alpha = log_alpha.exp();
        let p = SpcParams::new(
            FrequencyBand::new(5e3, 480e3).unwrap(),
            ThresholdGrid::new(0.001, 0.01, 1.0).unwrap(),
            PreprocessOptions { dc_correct, zero_pad },
        );
        let a = spc_index(&w, &p).unwrap();
        let b = spc_index(&w.scaled(alpha), &p).unwrap();
        prop_assert_eq!(&a.curve, &b.curve);
        prop_assert!(a.curve.is_monotone());
    }

    #[test]
    fn homogeneity_of_the_spectrum(seed in any::<u64>(), n in 8usize..=2048, alpha in 0.01f64..100.0) {
        let w = Waveform::new(random_waveform(seed, n), 1e6).unwrap();
        let a = magnitude_spectrum(&w);
        let b = magnitude_spectrum(&w.scaled(alpha));
        let scale = a.magnitudes().iter().copied().fold(0.0, f64::max);
        for (x, y) in a.magnitudes().iter().zip(b.magnitudes()) {
            prop_assert!((alpha * x - y).abs() <= 1e-10 * alpha * scale);
        }
    }

    #[test]
    fn preprocessing_is_idempotent(seed in any::<u64>(), n in 2usize..=3000) {
        let w = Waveform::new(random_waveform(seed, n), 1e6).unwrap();
        for pre in PreprocessOptions::ALL {
            let once = pre.apply(&w);
            prop_assert_eq!(pre.apply(&once), once);
        }
    }
}
