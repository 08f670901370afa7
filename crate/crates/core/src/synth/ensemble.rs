//! Synthetic stand-in for a set of instrumented plates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{modal_plate_response, rc1_waveform, Mode, ModalPlateSpec, Nonlinearity, Rc1Pulse, SynthError};
use crate::ingest::{expected_gain_db, Dataset, IngestError, MeasurementMeta, StudyRecord};
use crate::waveform::Waveform;

/// Impact-energy labels of the seven plates.
pub const PLATE_LABELS: [&str; 7] = ["10J", "15J", "20J", "25J", "30J", "40J", "50J"];

/// Transmitter/receiver disc pairs; disc 4 appears in exactly two of them.
pub const PAIR_LAYOUT: [(u8, u8); 12] = [
    (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2),
    (2, 5), (5, 2), (3, 5), (5, 3), (1, 4), (4, 1),
];

/// Generates modal-plate records keyed like real measurements.
///
/// Mode sets depend on the plate and, when `pair_dependent`, on the
/// unordered disc pair, so swapped directions share one linear transfer
/// function. Noise and DC offset are seeded per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateEnsemble {
    pub sample_rate: f64,
    pub n_samples: usize,
    pub pulse: Rc1Pulse,
    /// Pulse start time in seconds.
    pub excitation_delay: f64,
    pub modes_per_plate: usize,
    pub mode_band: (f64, f64),
    pub q_range: (f64, f64),
    pub pair_dependent: bool,
    /// Largest DC offset in volts; each record draws uniformly from +-dc_offset.
    pub dc_offset: f64,
    pub noise_rms: f64,
    pub nonlinearity: Option<Nonlinearity>,
    pub seed: u64,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn cell_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5bd1_e995_u64, |acc, &p| mix(acc ^ mix(p)))
}

impl PlateEnsemble {
    /// 12.5 MHz, 10048 samples, 500 kHz RC1 starting at 5 us, 40 modes in 10-700 kHz.
    pub fn standard(seed: u64) -> Self {
        Self {
            sample_rate: 12.5e6,
            n_samples: 10048,
            pulse: Rc1Pulse { u0: 60.0, fc: 500e3 },
            excitation_delay: 5e-6,
            modes_per_plate: 40,
            mode_band: (10e3, 700e3),
            q_range: (40.0, 200.0),
            pair_dependent: true,
            dc_offset: 0.0,
            noise_rms: 0.0,
            nonlinearity: None,
            seed,
        }
    }

    pub fn modal_spec(&self, plate_index: usize, pair: (u8, u8), noise_seed: u64) -> ModalPlateSpec {
        let (a, b) = (pair.0.min(pair.1), pair.0.max(pair.1));
        let pair_key = if self.pair_dependent { u64::from(a) * 8 + u64::from(b) } else { 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(&[self.seed, plate_index as u64, pair_key]));
        let modes = (0..self.modes_per_plate)
            .map(|_| Mode {
                f: rng.random_range(self.mode_band.0..self.mode_band.1),
                q: rng.random_range(self.q_range.0..self.q_range.1),
                gain: rng.random_range(0.1..1.0),
            })
            .collect();
        ModalPlateSpec { modes, noise_rms: self.noise_rms, seed: noise_seed }
    }

    fn excitation(&self, excitation_pct: f64) -> Result<Waveform, SynthError> {
        let pulse = Rc1Pulse { u0: self.pulse.u0 * excitation_pct / 100.0, ..self.pulse };
        let duration = self.n_samples as f64 / self.sample_rate;
        let pulse_wave = rc1_waveform(&pulse, self.sample_rate, duration)?;
        let delay = (self.excitation_delay * self.sample_rate).round() as usize;
        let mut samples = vec![0.0; self.n_samples];
        for (dst, src) in samples[delay.min(self.n_samples)..].iter_mut().zip(pulse_wave.samples()) {
            *dst = *src;
        }
        Ok(Waveform::new(samples, self.sample_rate)?)
    }

    /// Waveform for one plate/pair at `excitation_pct` percent drive.
    pub fn waveform(
        &self,
        plate_index: usize,
        pair: (u8, u8),
        excitation_pct: f64,
        repetition: u32,
    ) -> Result<Waveform, SynthError> {
        let record_seed = cell_seed(&[
            self.seed,
            plate_index as u64,
            u64::from(pair.0) * 8 + u64::from(pair.1),
            excitation_pct.to_bits(),
            u64::from(repetition),
        ]);
        let spec = self.modal_spec(plate_index, pair, record_seed);
        let y = modal_plate_response(&self.excitation(excitation_pct)?, &spec, self.nonlinearity)?;
        if self.dc_offset == 0.0 {
            return Ok(y);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(record_seed));
        let offset = self.dc_offset * rng.random_range(-1.0..=1.0);
        let samples = y.samples().iter().map(|v| v + offset).collect();
        Ok(Waveform::new(samples, self.sample_rate)?)
    }

    pub fn meta(&self, plate: &str, pair: (u8, u8), excitation_pct: u32, repetition: u32) -> MeasurementMeta {
        MeasurementMeta {
            plate: plate.to_string(),
            tx_disc: pair.0,
            rx_disc: pair.1,
            tx_channel: None,
            rx_channel: None,
            excitation_pct,
            gain_db: expected_gain_db(excitation_pct).unwrap_or(0),
            n_avg: 256,
            repetition,
            series: String::new(),
        }
    }

    /// Records for every plate x pair x excitation x repetition, minus those
    /// rejected by `skip`.
    pub fn dataset(
        &self,
        pairs: &[(u8, u8)],
        excitations: &[u32],
        repetitions: u32,
        skip: impl Fn(&MeasurementMeta) -> bool + Sync,
    ) -> Result<Dataset, EnsembleError> {
        use rayon::prelude::*;
        let mut cells = Vec::new();
        for (pi, plate) in PLATE_LABELS.iter().enumerate() {
            for &pair in pairs {
                for &pct in excitations {
                    for rep in 0..repetitions {
                        let meta = self.meta(plate, pair, pct, rep);
                        if !skip(&meta) {
                            cells.push((pi, meta));
                        }
                    }
                }
            }
        }
        let records: Result<Vec<StudyRecord>, SynthError> = cells
            .into_par_iter()
            .map(|(pi, meta)| {
                let w = self.waveform(pi, meta.pair(), f64::from(meta.excitation_pct), meta.repetition)?;
                Ok(StudyRecord::new(meta, w))
            })
            .collect();
        Ok(Dataset::new(records?)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}
