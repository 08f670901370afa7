use std::collections::BTreeMap;

use spc_core::ingest::{expected_gain_db, Dataset, MeasurementMeta, StudyRecord};
use spc_core::report::{emit_report, render_json, render_plot, ReportFormat};
use spc_core::stats::{GroupStats, Trend};
use spc_core::study::{
    run_amplitude_study, run_averaging_study, run_pair_sweep, run_preprocess_sensitivity, run_reciprocity,
    run_repeatability, AmplitudeSource, AveragingConfig, AveragingSource, Finding, GroupBy, NoisyGenerator,
    ReciprocityConfig, Selector, SeriesGenerator, StudyResult,
};
use spc_core::synth::{
    exact_bin_frequency, quadratic_mix_waveform, NoiseSource, PlateEnsemble, QuadraticMixSpec, Tone, PAIR_LAYOUT,
    PLATE_LABELS,
};
use spc_core::{spc_index, FrequencyBand, NormalizeScope, PreprocessOptions, SpcParams, ThresholdGrid, Waveform};

fn params() -> SpcParams {
    SpcParams::new(
        FrequencyBand::new(10e3, 700e3).unwrap(),
        ThresholdGrid::new(0.001, 0.01, 1.0).unwrap(),
        PreprocessOptions::default(),
    )
}

fn small_ensemble(seed: u64) -> PlateEnsemble {
    let mut e = PlateEnsemble::standard(seed);
    e.n_samples = 2048;
    e
}

fn lost_disc_four(m: &MeasurementMeta) -> bool {
    m.plate == "25J" && (m.tx_disc == 4 || m.rx_disc == 4)
}

fn meta(plate: &str, pair: (u8, u8), pct: u32, rep: u32) -> MeasurementMeta {
    MeasurementMeta {
        plate: plate.into(),
        tx_disc: pair.0,
        rx_disc: pair.1,
        tx_channel: None,
        rx_channel: None,
        excitation_pct: pct,
        gain_db: expected_gain_db(pct).unwrap(),
        n_avg: 256,
        repetition: rep,
        series: String::new(),
    }
}

#[test]
fn pair_sweep_marks_lost_disc_absent_and_orders_plates() {
    let ds = small_ensemble(4).dataset(&PAIR_LAYOUT, &[20], 1, lost_disc_four).unwrap();
    let r = run_pair_sweep(&ds, &Selector::default(), &params()).unwrap();
    assert_eq!(r.rows.len(), 82);
    let absent: Vec<_> = r.findings.iter().filter(|f| matches!(f, Finding::Absent { .. })).collect();
    assert_eq!(absent.len(), 2);
    assert!(absent.iter().all(|f| matches!(f, Finding::Absent { plate, .. } if plate == "25J")));
    assert_eq!(r.series_names().len(), 12);
    for name in r.series_names() {
        let xs: Vec<&str> = r.series(&name).iter().map(|row| row.x.as_str()).collect();
        let expect: Vec<&str> = PLATE_LABELS.iter().copied().filter(|p| !(name.contains('4') && *p == "25J")).collect();
        assert_eq!(xs, expect, "series {name}");
    }
    // plot table: one block per pair, x indices follow 10J..50J
    let plot = render_plot(&r);
    assert_eq!(plot.matches("# series: ").count(), 12);
    assert!(plot.contains("0 \"10J\""));
    assert!(plot.contains("6 \"50J\""));
}

#[test]
fn pair_independent_response_has_no_spread() {
    let mut e = small_ensemble(5);
    e.pair_dependent = false;
    let ds = e.dataset(&PAIR_LAYOUT, &[20], 1, |_| false).unwrap();
    let r = run_pair_sweep(&ds, &Selector::default(), &params()).unwrap();
    for s in r.stats.values() {
        assert_eq!(s.n, 12);
        assert!(s.spread() < 1e-12);
    }
}

#[test]
fn single_pair_dataset_has_zero_spread() {
    let ds = small_ensemble(6).dataset(&[(2, 3)], &[20], 1, |_| false).unwrap();
    let r = run_pair_sweep(&ds, &Selector::default(), &params()).unwrap();
    assert!(r.stats.values().all(|s| s.spread() == 0.0 && s.n == 1));
}

#[test]
fn identical_waveform_in_both_directions_gives_ratio_one() {
    let w = small_ensemble(7).waveform(0, (2, 3), 20.0, 0).unwrap();
    let ds = Dataset::new(vec![
        StudyRecord::new(meta("10J", (2, 3), 20, 0), w.clone()),
        StudyRecord::new(meta("10J", (3, 2), 20, 0), w),
    ])
    .unwrap();
    let r = run_reciprocity(&ds, &Selector::default(), &ReciprocityConfig::new((2, 3)), &params()).unwrap();
    assert!(matches!(r.findings[0], Finding::Reciprocity { ratio, flagged: false, .. } if ratio == 1.0));
}

#[test]
fn noisy_reciprocal_pair_stays_within_monte_carlo_bounds() {
    let mut e = small_ensemble(8);
    e.noise_rms = 0.002;
    // spread of the index under noise alone, from repeated seeds of one direction
    let reps: Vec<f64> = (0..24)
        .map(|rep| spc_index(&e.waveform(3, (2, 3), 20.0, 100 + rep).unwrap(), &params()).unwrap().value)
        .collect();
    let s = GroupStats::from_values(&reps);
    let (lo, hi) = (s.mean - 5.0 * s.std, s.mean + 5.0 * s.std);
    assert!(lo > 0.0);
    let ds = e.dataset(&[(2, 3), (3, 2)], &[20], 1, |_| false).unwrap();
    let r = run_reciprocity(&ds, &Selector::default(), &ReciprocityConfig::new((2, 3)), &params()).unwrap();
    assert_eq!(r.findings.len(), 7);
    // plate 3 is the plate the bound was estimated on
    let Finding::Reciprocity { ratio, .. } = &r.findings[3] else { unreachable!() };
    assert!(*ratio >= lo / hi && *ratio <= hi / lo, "ratio {ratio} outside [{}, {}]", lo / hi, hi / lo);
}

fn qmix(e1: f64, a: f64) -> spc_core::Waveform {
    let n = 10000;
    let rate = 12.5e6;
    quadratic_mix_waveform(&QuadraticMixSpec {
        e0: 1.0,
        e1,
        amplitude: a,
        tones: vec![
            Tone { c: 1.0, f: exact_bin_frequency(40, rate, n) },
            Tone { c: 1.0, f: exact_bin_frequency(240, rate, n) },
        ],
        duration: n as f64 / rate,
        sample_rate: rate,
    })
    .unwrap()
}

#[test]
fn amplitude_study_linear_is_constant_and_quadratic_rises() {
    let amplitudes = vec![1.0, 2.0, 4.0, 8.0];
    let src = AmplitudeSource::Generators {
        series: vec![
            SeriesGenerator::new("linear", |a| Ok(qmix(0.0, a))),
            SeriesGenerator::new("quadratic", |a| Ok(qmix(0.05, a))),
        ],
        amplitudes,
    };
    let r = run_amplitude_study(&src, &params()).unwrap();
    let linear: Vec<f64> = r.series("linear").iter().map(|row| row.value).collect();
    assert!(linear.iter().all(|v| *v == linear[0]));
    let quad: Vec<f64> = r.series("quadratic").iter().map(|row| row.value).collect();
    assert!(quad.windows(2).all(|w| w[1] >= w[0]));
    for f in &r.findings {
        if let Finding::TrendSummary { series, tau, increasing, decreasing, flat, non_monotone, .. } = f {
            assert_eq!(increasing + decreasing + flat + non_monotone, 4, "C(4,3)");
            match series.as_str() {
                "linear" => assert_eq!(*tau, None),
                _ => assert!(tau.unwrap() >= 0.0),
            }
        }
    }
}

#[test]
fn linear_ensemble_amplitude_study_is_invariant() {
    let ds = small_ensemble(9).dataset(&[(2, 3)], &[5, 10, 20, 40, 80, 100], 1, |_| false).unwrap();
    let src = AmplitudeSource::Dataset { dataset: &ds, selector: &Selector::default(), excitations: None };
    let r = run_amplitude_study(&src, &params()).unwrap();
    assert_eq!(r.series_names().len(), 7);
    for name in r.series_names() {
        let v: Vec<f64> = r.series(&name).iter().map(|row| row.value).collect();
        assert_eq!(v.len(), 6);
        assert!(v.iter().all(|x| *x == v[0]), "{name}: {v:?}");
    }
    let subsets = r.findings.iter().filter(|f| matches!(f, Finding::Subset { verdict: Trend::Flat, .. })).count();
    assert_eq!(subsets, 7 * 20);
}

#[test]
fn constant_repetitions_have_zero_std() {
    let w = small_ensemble(10).waveform(0, (2, 3), 20.0, 0).unwrap();
    let ds = Dataset::new((0..10).map(|rep| StudyRecord::new(meta("10J", (2, 3), 20, rep), w.clone())).collect()).unwrap();
    let r = run_repeatability(&ds, &Selector::default(), GroupBy::Condition, &params()).unwrap();
    match &r.findings[0] {
        Finding::Repeatability { n, std, std_population, .. } => {
            assert_eq!(*n, 10);
            assert_eq!(*std, 0.0);
            assert_eq!(*std_population, 0.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn stats_agree_with_an_independent_pass() {
    let mut e = small_ensemble(11);
    e.noise_rms = 0.003;
    let ds = e.dataset(&[(2, 3)], &[20], 10, |_| false).unwrap();
    let r = run_repeatability(&ds, &Selector::default(), GroupBy::Plate, &params()).unwrap();
    for (group, s) in &r.stats {
        let values: Vec<f64> = r.rows.iter().filter(|row| &row.group == group).map(|row| row.value).collect();
        let (mut mean, mut m2) = (0.0, 0.0);
        for (i, v) in values.iter().enumerate() {
            let d = v - mean;
            mean += d / (i + 1) as f64;
            m2 += d * (v - mean);
        }
        let std = (m2 / (values.len() - 1) as f64).sqrt();
        assert!((s.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        assert!((s.std - std).abs() <= 1e-12 * std.max(1.0));
    }
}

fn single_peak(n: usize) -> Waveform {
    let rate = 12.5e6;
    let f = exact_bin_frequency(100, rate, n);
    Waveform::new((0..n).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / rate).sin()).collect(), rate).unwrap()
}

#[test]
fn noiseless_averaging_is_independent_of_count() {
    let g = NoisyGenerator { clean: single_peak(2048), noise_rms: 0.0, seed: 1 };
    let cfg = AveragingConfig { n_avg: vec![1, 2, 4, 8, 16, 32, 64, 128, 256], stable_from: 32, tolerance: 0.0 };
    let r = run_averaging_study(&AveragingSource::Generator(g), &cfg, &params()).unwrap();
    let v: Vec<f64> = r.rows.iter().map(|row| row.value).collect();
    assert!(v.iter().all(|x| *x == v[0]));
    assert!(r.flagged().next().is_none());
}

#[test]
fn averaging_reduces_noise_peaks_and_rms() {
    let ladder: Vec<u32> = (0..=8).map(|k| 1 << k).collect();
    let g = NoisyGenerator { clean: single_peak(10048), noise_rms: 0.05, seed: 3 };
    let cfg = AveragingConfig { n_avg: ladder.clone(), stable_from: 32, tolerance: 0.5 };
    let r = run_averaging_study(&AveragingSource::Generator(g), &cfg, &params()).unwrap();
    let v: Vec<f64> = r.rows.iter().map(|row| row.value).collect();
    assert!(v[8] < v[0], "{v:?}");
    assert!((v[8] - 1.0).abs() < 0.5, "{v:?}");
    let mut last = f64::INFINITY;
    for f in &r.findings {
        if let Finding::NoiseReduction { rms, relative_error, .. } = f {
            assert!(relative_error.abs() < 0.05, "{f:?}");
            assert!(*rms < last);
            last = *rms;
        }
    }
    assert!(r.findings.iter().any(|f| matches!(f, Finding::Stability { n_avg: 32, .. })));
}

#[test]
fn dataset_averaging_ladder() {
    let base = small_ensemble(12).waveform(0, (2, 3), 20.0, 0).unwrap();
    let records = [1u32, 4, 16, 64, 256]
        .iter()
        .map(|&n| {
            let mut m = meta("10J", (2, 3), 20, 0);
            m.n_avg = n;
            let mut s = base.samples().to_vec();
            NoiseSource::new(n as u64).add_to(&mut s, 0.01 / f64::from(n).sqrt());
            StudyRecord::new(m, Waveform::new(s, base.sample_rate()).unwrap())
        })
        .collect();
    let ds = Dataset::new(records).unwrap();
    let cfg = AveragingConfig { n_avg: vec![], stable_from: 32, tolerance: 1.0 };
    let sel = Selector::default();
    let r = run_averaging_study(&AveragingSource::Dataset { dataset: &ds, selector: &sel }, &cfg, &params()).unwrap();
    let xs: Vec<&str> = r.rows.iter().map(|row| row.x.as_str()).collect();
    assert_eq!(xs, vec!["1", "4", "16", "64", "256"]);
    assert_eq!(r.findings.iter().filter(|f| matches!(f, Finding::Stability { .. })).count(), 1);
}

fn grids() -> Vec<ThresholdGrid> {
    vec![
        ThresholdGrid::new(0.001, 0.01, 1.0).unwrap(),
        ThresholdGrid::new(0.001, 0.111, 1.0).unwrap(),
        ThresholdGrid::new(0.0001, 0.001, 0.05).unwrap(),
    ]
}

fn preprocess_study(threads: Option<usize>) -> StudyResult {
    // not a power of two, so padding turns the DC offset into leakage
    let mut e = small_ensemble(13);
    e.n_samples = 2000;
    e.dc_offset = 0.05;
    e.noise_rms = 0.001;
    let ds = e.dataset(&[(2, 3)], &[20], 1, |_| false).unwrap();
    let run = || {
        run_preprocess_sensitivity(
            &ds,
            &Selector::reference_condition(),
            FrequencyBand::new(10e3, 700e3).unwrap(),
            &grids(),
            NormalizeScope::Band,
        )
        .unwrap()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(run),
        None => run(),
    }
}

#[test]
fn preprocess_study_covers_every_variant_and_grid() {
    let r = preprocess_study(None);
    assert_eq!(r.params.len(), 4 * 3);
    assert_eq!(r.rows.len(), 7 * 4 * 3);
    let labels: Vec<&String> = r.params.keys().collect();
    assert!(labels.iter().any(|l| l.starts_with("fft-dc ")));
    // DC offset makes the raw and corrected variants disagree somewhere
    assert!(r.findings.iter().any(|f| matches!(f, Finding::DistinctValues { distinct, .. } if *distinct >= 2)));
}

#[test]
fn serial_and_parallel_runs_are_identical() {
    let serial = preprocess_study(Some(1));
    let parallel = preprocess_study(Some(8));
    assert_eq!(serial, parallel);
    assert_eq!(render_json(&serial).unwrap(), render_json(&parallel).unwrap());
}

#[test]
fn reports_are_byte_deterministic() {
    let r = preprocess_study(None);
    let dir = tempfile::tempdir().unwrap();
    let mut first = BTreeMap::new();
    for fmt in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plot] {
        for path in emit_report(&r, fmt, dir.path(), "a").unwrap() {
            first.insert(path.file_name().unwrap().to_owned(), std::fs::read(&path).unwrap());
        }
    }
    let again = preprocess_study(None);
    for fmt in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plot] {
        for path in emit_report(&again, fmt, dir.path(), "a").unwrap() {
            assert_eq!(std::fs::read(&path).unwrap(), first[path.file_name().unwrap()], "{}", path.display());
        }
    }
    assert_eq!(first.len(), 6);
}
