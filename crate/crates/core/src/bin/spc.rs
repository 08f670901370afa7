//! `spc` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O or data error, 2 invalid arguments or spec,
//! 3 no spectral content in the band, 4 missing or unpaired records.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use spc_core::ingest::{
    load_manifest, read_binary_waveform, read_csv_waveform, write_binary_waveform, write_csv_waveform, BinaryLayout,
    DatasetManifest, FileFormat, IngestError, ManifestRecord,
};
use spc_core::report::{emit_report, flagged_summary, fmt6, params_json, round_json, ReportFormat};
use spc_core::study::{
    run_amplitude_study, run_averaging_study, run_pair_sweep, run_preprocess_sensitivity, run_reciprocity,
    run_repeatability, AmplitudeSource, AveragingConfig, AveragingSource, GroupBy, NoisyGenerator,
    ReciprocityConfig, Selector, StudyError, StudyKind, StudyResult,
};
use spc_core::synth::{
    exact_bin_frequency, hertzian_mix_waveform, modal_plate_response, quadratic_mix_waveform, rc1_waveform,
    sample_count, HertzianMixSpec, Mode, ModalPlateSpec, Nonlinearity, NonlinearityKind, PlateEnsemble,
    QuadraticMixSpec, Rc1Pulse, SynthError, Tone, PAIR_LAYOUT,
};
use spc_core::{spc_index, FrequencyBand, NormalizeScope, PreprocessOptions, SpcError, SpcParams, ThresholdGrid, Waveform};

#[derive(Debug)]
enum CliError {
    Io(String),
    Validation(String),
    AllZero(String),
    Missing(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::AllZero(_) => 3,
            CliError::Missing(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Validation(m) | CliError::AllZero(m) | CliError::Missing(m) => m,
        }
    }
}

impl From<SpcError> for CliError {
    fn from(e: SpcError) -> Self {
        if e.is_all_zero_in_band() {
            CliError::AllZero(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::UnknownLayout(_) => CliError::Validation(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::MissingRecord(ref keys) | StudyError::UnpairedRecord(ref keys) => {
                let head = match e {
                    StudyError::MissingRecord(_) => "missing records",
                    _ => "unpaired records",
                };
                CliError::Missing(format!("{head}:\n  {}", keys.join("\n  ")))
            }
            StudyError::Record { key, source } => {
                let inner = CliError::from(source);
                match inner {
                    CliError::AllZero(m) => CliError::AllZero(format!("{key}: {m}")),
                    other => CliError::Validation(format!("{key}: {}", other.message())),
                }
            }
            StudyError::Spc(e) => e.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(name = "spc", version, about = "Sideband peak count index tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the index of one waveform file.
    Compute(ComputeArgs),
    /// Write a synthetic waveform or dataset.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Run a study described by a TOML spec over a dataset manifest.
    Study(StudyArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// `csv` or a binary layout such as `i16le`, `f32be`, `f64le`.
    #[arg(long, default_value = "csv")]
    layout: String,
    /// Sample rate in Hz; required for binary input, checked against CSV time stamps.
    #[arg(long)]
    rate: Option<f64>,
    /// Volts per binary count.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    header_bytes: usize,
}

/// Science parameters: optional at the parser level so that a missing one
/// is reported by name with exit code 2.
#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    f_min: Option<f64>,
    #[arg(long)]
    f_max: Option<f64>,
    #[arg(long)]
    thr_min: Option<f64>,
    #[arg(long)]
    thr_step: Option<f64>,
    #[arg(long)]
    thr_max: Option<f64>,
    /// Subtract the first sample before the transform.
    #[arg(long)]
    dc_correct: bool,
    /// Zero-pad to the next power of two before the transform.
    #[arg(long)]
    zero_pad: bool,
    /// Normalisation reference: maximum inside the band or over the whole spectrum.
    #[arg(long, value_parser = ["band", "full"], default_value = "band")]
    normalize: String,
}

impl ParamArgs {
    fn params(&self) -> Result<SpcParams, CliError> {
        let missing: Vec<String> = [
            ("f-min", self.f_min),
            ("f-max", self.f_max),
            ("thr-min", self.thr_min),
            ("thr-step", self.thr_step),
            ("thr-max", self.thr_max),
        ]
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(name, _)| format!("{name} required"))
        .collect();
        if !missing.is_empty() {
            return Err(CliError::Validation(missing.join("\n")));
        }
        let band = FrequencyBand::new(self.f_min.unwrap(), self.f_max.unwrap())
            .map_err(|e| CliError::Validation(format!("--f-min/--f-max: {e}")))?;
        let grid = ThresholdGrid::new(self.thr_min.unwrap(), self.thr_step.unwrap(), self.thr_max.unwrap())
            .map_err(|e| CliError::Validation(format!("--thr-min/--thr-step/--thr-max: {e}")))?;
        let normalize = if self.normalize == "full" { NormalizeScope::Full } else { NormalizeScope::Band };
        Ok(SpcParams {
            band,
            grid,
            preprocess: PreprocessOptions { dc_correct: self.dc_correct, zero_pad: self.zero_pad },
            normalize,
        })
    }
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long)]
    output: PathBuf,
    /// `csv` or a binary layout such as `f64le`.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct ToneArgs {
    #[arg(long, default_value_t = 12.5e6)]
    rate: f64,
    /// Number of samples; tones sit on exact bins of this length.
    #[arg(long, default_value_t = 10000)]
    n: usize,
    /// Tone as `bin:weight`, e.g. `40:1`. Repeat for each tone.
    #[arg(long = "tone", default_values = ["40:1", "240:1"])]
    tones: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    e0: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
}

impl ToneArgs {
    fn tones(&self) -> Result<Vec<Tone>, CliError> {
        self.tones
            .iter()
            .map(|t| {
                let bad = || CliError::Validation(format!("--tone '{t}': expected bin:weight"));
                let (k, c) = t.split_once(':').ok_or_else(bad)?;
                let k: usize = k.trim().parse().map_err(|_| bad())?;
                let c: f64 = c.trim().parse().map_err(|_| bad())?;
                Ok(Tone { c, f: exact_bin_frequency(k, self.rate, self.n) })
            })
            .collect()
    }

    fn duration(&self) -> f64 {
        self.n as f64 / self.rate
    }
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Single-cycle raised-cosine pulse.
    Rc1 {
        #[arg(long)]
        fc: f64,
        #[arg(long, default_value_t = 1.0)]
        u0: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        dur: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tones through a quadratic stress-strain law.
    Qmix {
        #[arg(long)]
        e1: f64,
        #[command(flatten)]
        tones: ToneArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tones through a Hertzian-contact law.
    Hmix {
        #[arg(long)]
        h1: f64,
        #[arg(long, default_value_t = 1.5)]
        exponent: f64,
        #[command(flatten)]
        tones: ToneArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// RC1 pulse through a multi-mode plate response with seeded noise.
    Modal {
        /// CSV with columns f,q,gain.
        #[arg(long)]
        modes: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise_rms: f64,
        #[arg(long, default_value_t = 500e3)]
        fc: f64,
        #[arg(long, default_value_t = 1.0)]
        u0: f64,
        #[arg(long, default_value_t = 12.5e6)]
        rate: f64,
        #[arg(long, default_value_t = 803.84e-6)]
        dur: f64,
        /// `quadratic:STRENGTH` or `hertzian:STRENGTH`.
        #[arg(long)]
        nonlinearity: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Synthetic seven-plate dataset with a manifest.
    PlateSet {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,80,100")]
        excitations: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        repetitions: u32,
        #[arg(long, default_value_t = 10048)]
        n_samples: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_rms: f64,
        #[arg(long, default_value_t = 0.0)]
        dc_offset: f64,
        #[arg(long)]
        nonlinearity: Option<String>,
        /// Identical transfer function for every disc pair of a plate.
        #[arg(long)]
        pair_independent: bool,
        /// Drop pairs using a disc on a plate, as `PLATE:DISC`. Repeatable.
        #[arg(long = "lost-disc")]
        lost_disc: Vec<String>,
        #[arg(long, default_value = "f64le")]
        layout: String,
    },
}

#[derive(Args)]
struct StudyArgs {
    /// Dataset manifest (TOML).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Study spec (TOML).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated: csv, json, plot.
    #[arg(long, value_delimiter = ',', default_value = "csv,json,plot")]
    format: Vec<String>,
    /// Output file stem; defaults to the study name.
    #[arg(long)]
    stem: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(args) => cmd_compute(&args),
        Command::Synth(cmd) => cmd_synth(&cmd),
        Command::Study(args) => cmd_study(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read_input(args: &InputArgs) -> Result<Waveform, CliError> {
    if args.layout == "csv" {
        return Ok(read_csv_waveform(&args.input, args.rate)?);
    }
    let layout = BinaryLayout { header_bytes: args.header_bytes, ..args.layout.parse::<BinaryLayout>()? }.with_scale(args.scale);
    let rate = args.rate.ok_or_else(|| CliError::Validation("rate required for binary input".into()))?;
    Ok(read_binary_waveform(&args.input, &layout, rate)?)
}

fn to_pretty(mut v: Value) -> String {
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("json");
    s.push('\n');
    s
}

fn cmd_compute(args: &ComputeArgs) -> Result<(), CliError> {
    let params = args.params.params()?;
    if !(args.input.scale.is_finite() && args.input.scale != 0.0) {
        return Err(CliError::Validation("--scale must be finite and non-zero".into()));
    }
    let w = read_input(&args.input)?;
    let index = spc_index(&w, &params)?;
    let curve: Vec<Value> = index.curve.points().map(|(thr, count)| json!({ "thr": thr, "count": count })).collect();
    let doc = json!({
        "schema": 1,
        "command": "compute",
        "input": {
            "path": args.input.input.display().to_string(),
            "layout": args.input.layout,
            "scale": args.input.scale,
            "header_bytes": args.input.header_bytes,
            "n_samples": w.len(),
            "sample_rate": w.sample_rate(),
        },
        "params": params_json(&params),
        "spc_i": index.value,
        "curve": curve,
    });
    let text = to_pretty(doc);
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_waveform(w: &Waveform, out: &OutputArgs) -> Result<(), CliError> {
    if out.format == "csv" {
        write_csv_waveform(&out.output, w)?;
    } else {
        let layout: BinaryLayout = out.format.parse()?;
        write_binary_waveform(&out.output, w, &layout)?;
    }
    Ok(())
}

fn parse_nonlinearity(s: &Option<String>) -> Result<Option<Nonlinearity>, CliError> {
    let Some(s) = s else { return Ok(None) };
    let bad = || CliError::Validation(format!("--nonlinearity '{s}': expected quadratic:S or hertzian:S"));
    let (kind, strength) = s.split_once(':').ok_or_else(bad)?;
    let kind = match kind {
        "quadratic" => NonlinearityKind::Quadratic,
        "hertzian" => NonlinearityKind::Hertzian,
        _ => return Err(bad()),
    };
    let strength: f64 = strength.parse().map_err(|_| bad())?;
    Ok(Some(Nonlinearity { kind, strength }))
}

fn echo(generator: &str, spec: Value, w: &Waveform, output: &Path) {
    let doc = json!({
        "schema": 1,
        "command": "synth",
        "generator": generator,
        "spec": spec,
        "output": output.display().to_string(),
        "n_samples": w.len(),
        "sample_rate": w.sample_rate(),
    });
    print!("{}", to_pretty(doc));
}

fn json_of<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("spec serializes")
}

fn cmd_synth(cmd: &SynthCommand) -> Result<(), CliError> {
    match cmd {
        SynthCommand::Rc1 { fc, u0, rate, dur, out } => {
            let pulse = Rc1Pulse { u0: *u0, fc: *fc };
            let w = rc1_waveform(&pulse, *rate, *dur)?;
            write_waveform(&w, out)?;
            echo("rc1", json!({ "u0": u0, "fc": fc, "rate": rate, "dur": dur }), &w, &out.output);
        }
        SynthCommand::Qmix { e1, tones, out } => {
            let spec = QuadraticMixSpec {
                e0: tones.e0,
                e1: *e1,
                amplitude: tones.amplitude,
                tones: tones.tones()?,
                duration: tones.duration(),
                sample_rate: tones.rate,
            };
            let w = quadratic_mix_waveform(&spec)?;
            write_waveform(&w, out)?;
            echo("qmix", json_of(&spec), &w, &out.output);
        }
        SynthCommand::Hmix { h1, exponent, tones, out } => {
            let spec = HertzianMixSpec {
                e0: tones.e0,
                h1: *h1,
                amplitude: tones.amplitude,
                exponent: *exponent,
                tones: tones.tones()?,
                duration: tones.duration(),
                sample_rate: tones.rate,
            };
            let w = hertzian_mix_waveform(&spec)?;
            write_waveform(&w, out)?;
            echo("hmix", json_of(&spec), &w, &out.output);
        }
        SynthCommand::Modal { modes, seed, noise_rms, fc, u0, rate, dur, nonlinearity, out } => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(modes).map_err(|e| io_err(modes, e))?;
            let modes_list = reader
                .deserialize::<Mode>()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Validation(format!("{}: {e}", modes.display())))?;
            let spec = ModalPlateSpec { modes: modes_list, noise_rms: *noise_rms, seed: *seed };
            let nl = parse_nonlinearity(nonlinearity)?;
            let excitation = rc1_waveform(&Rc1Pulse { u0: *u0, fc: *fc }, *rate, *dur)?;
            let w = modal_plate_response(&excitation, &spec, nl)?;
            write_waveform(&w, out)?;
            echo(
                "modal",
                json!({ "plate": json_of(&spec), "nonlinearity": json_of(&nl), "fc": fc, "u0": u0, "rate": rate, "dur": dur, "n": sample_count(*dur, *rate) }),
                &w,
                &out.output,
            );
        }
        SynthCommand::PlateSet {
            out_dir,
            seed,
            excitations,
            repetitions,
            n_samples,
            noise_rms,
            dc_offset,
            nonlinearity,
            pair_independent,
            lost_disc,
            layout,
        } => {
            let mut ensemble = PlateEnsemble::standard(*seed);
            ensemble.n_samples = *n_samples;
            ensemble.noise_rms = *noise_rms;
            ensemble.dc_offset = *dc_offset;
            ensemble.nonlinearity = parse_nonlinearity(nonlinearity)?;
            ensemble.pair_dependent = !pair_independent;
            let lost = lost_disc
                .iter()
                .map(|s| {
                    let bad = || CliError::Validation(format!("--lost-disc '{s}': expected PLATE:DISC"));
                    let (p, d) = s.split_once(':').ok_or_else(bad)?;
                    Ok((p.to_string(), d.parse::<u8>().map_err(|_| bad())?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let bin_layout: BinaryLayout = layout.parse()?;
            let dataset = ensemble
                .dataset(&PAIR_LAYOUT, excitations, *repetitions, |m| {
                    lost.iter().any(|(p, d)| *p == m.plate && (m.tx_disc == *d || m.rx_disc == *d))
                })
                .map_err(|e| CliError::Validation(e.to_string()))?;
            std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
            let mut manifest = DatasetManifest::new(ensemble.sample_rate, FileFormat::Binary(bin_layout));
            manifest.n_samples = Some(*n_samples);
            for rec in dataset.records() {
                let m = &rec.meta;
                let name = format!("{}_{}-{}_{}pct_rep{}.{}", m.plate, m.tx_disc, m.rx_disc, m.excitation_pct, m.repetition, layout);
                let path = out_dir.join(&name);
                write_binary_waveform(&path, &rec.waveform, &bin_layout)?;
                manifest.records.push(ManifestRecord { file: path, meta: m.clone(), format: None });
            }
            let manifest_path = out_dir.join("manifest.toml");
            std::fs::write(&manifest_path, manifest.to_toml(out_dir)).map_err(|e| io_err(&manifest_path, e))?;
            let doc = json!({
                "schema": 1,
                "command": "synth",
                "generator": "plate-set",
                "spec": json_of(&ensemble),
                "excitations": excitations,
                "repetitions": repetitions,
                "lost_disc": lost_disc,
                "records": dataset.len(),
                "manifest": manifest_path.display().to_string(),
            });
            print!("{}", to_pretty(doc));
        }
    }
    Ok(())
}

/// Science parameters of a study; every field must be given.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamSpec {
    f_min: f64,
    f_max: f64,
    thr_min: f64,
    thr_step: f64,
    thr_max: f64,
    dc_correct: bool,
    zero_pad: bool,
    normalize: NormalizeScope,
}

impl ParamSpec {
    fn params(&self) -> Result<SpcParams, CliError> {
        Ok(SpcParams {
            band: FrequencyBand::new(self.f_min, self.f_max).map_err(|e| CliError::Validation(format!("params: {e}")))?,
            grid: ThresholdGrid::new(self.thr_min, self.thr_step, self.thr_max)
                .map_err(|e| CliError::Validation(format!("params: {e}")))?,
            preprocess: PreprocessOptions { dc_correct: self.dc_correct, zero_pad: self.zero_pad },
            normalize: self.normalize,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandSpec {
    f_min: f64,
    f_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    thr_min: f64,
    thr_step: f64,
    thr_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoisySpec {
    /// Clean waveform, CSV, relative to the spec file.
    input: PathBuf,
    #[serde(default)]
    rate: Option<f64>,
    noise_rms: f64,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudySpec {
    study: StudyKind,
    #[serde(default)]
    selector: Selector,
    params: Option<ParamSpec>,
    band: Option<BandSpec>,
    grids: Option<Vec<GridSpec>>,
    normalize: Option<NormalizeScope>,
    reciprocity: Option<ReciprocityConfig>,
    excitations: Option<Vec<u32>>,
    group_by: Option<GroupBy>,
    averaging: Option<AveragingConfig>,
    noisy: Option<NoisySpec>,
}

fn required<'a, T>(v: &'a Option<T>, key: &str, study: StudyKind) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Validation(format!("study spec: '{key}' required for {} study", study.name())))
}

fn cmd_study(args: &StudyArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.spec).map_err(|e| io_err(&args.spec, e))?;
    let spec: StudySpec =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", args.spec.display())))?;
    let formats = args
        .format
        .iter()
        .map(|f| f.parse::<ReportFormat>().map_err(CliError::Validation))
        .collect::<Result<Vec<_>, _>>()?;
    let kind = spec.study;

    let needs_dataset = !(kind == StudyKind::Averaging && spec.noisy.is_some());
    let dataset = if needs_dataset {
        let path = args
            .manifest
            .as_ref()
            .ok_or_else(|| CliError::Validation("manifest required for this study".into()))?;
        Some(load_manifest(path)?.load_dataset()?)
    } else {
        None
    };
    let ds = || dataset.as_ref().expect("dataset loaded");
    let params = || required(&spec.params, "params", kind)?.params();

    let result: StudyResult = match kind {
        StudyKind::Preprocess => {
            let band = required(&spec.band, "band", kind)?;
            let band = FrequencyBand::new(band.f_min, band.f_max).map_err(|e| CliError::Validation(format!("band: {e}")))?;
            let grids = required(&spec.grids, "grids", kind)?
                .iter()
                .map(|g| ThresholdGrid::new(g.thr_min, g.thr_step, g.thr_max))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Validation(format!("grids: {e}")))?;
            let normalize = *required(&spec.normalize, "normalize", kind)?;
            run_preprocess_sensitivity(ds(), &spec.selector, band, &grids, normalize)?
        }
        StudyKind::Pairs => run_pair_sweep(ds(), &spec.selector, &params()?)?,
        StudyKind::Reciprocity => {
            let config = required(&spec.reciprocity, "reciprocity", kind)?;
            run_reciprocity(ds(), &spec.selector, config, &params()?)?
        }
        StudyKind::Amplitude => {
            let source =
                AmplitudeSource::Dataset { dataset: ds(), selector: &spec.selector, excitations: spec.excitations.clone() };
            run_amplitude_study(&source, &params()?)?
        }
        StudyKind::Repeatability => {
            let group_by = *required(&spec.group_by, "group_by", kind)?;
            run_repeatability(ds(), &spec.selector, group_by, &params()?)?
        }
        StudyKind::Averaging => {
            let config = required(&spec.averaging, "averaging", kind)?;
            let params = params()?;
            match &spec.noisy {
                Some(noisy) => {
                    let base = args.spec.parent().unwrap_or(Path::new("."));
                    let clean = read_csv_waveform(&base.join(&noisy.input), noisy.rate)?;
                    let generator = NoisyGenerator { clean, noise_rms: noisy.noise_rms, seed: noisy.seed };
                    run_averaging_study(&AveragingSource::Generator(generator), config, &params)?
                }
                None => run_averaging_study(
                    &AveragingSource::Dataset { dataset: ds(), selector: &spec.selector },
                    config,
                    &params,
                )?,
            }
        }
    };

    let stem = args.stem.clone().unwrap_or_else(|| kind.name().to_string());
    let mut written = Vec::new();
    for f in formats {
        written.extend(emit_report(&result, f, &args.out, &stem).map_err(|e| CliError::Io(e.to_string()))?);
    }
    print_summary(&result);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_summary(result: &StudyResult) {
    println!("study: {}", result.study.name());
    for (label, p) in &result.params {
        println!("config {label}: {}", params_json(p));
    }
    println!("{:<40} {:>4} {:>10} {:>10} {:>10}  note", "series", "n", "mean", "min", "max");
    for name in result.series_names() {
        let values: Vec<f64> = result.series(&name).iter().map(|r| r.value).collect();
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let note = if n > 1 && min == max { "invariant" } else { "" };
        println!("{name:<40} {n:>4} {:>10} {:>10} {:>10}  {note}", fmt6(mean), fmt6(min), fmt6(max));
    }
    let flagged = flagged_summary(result);
    println!("flagged findings: {}", flagged.len());
    for line in flagged {
        println!("  {line}");
    }
}
