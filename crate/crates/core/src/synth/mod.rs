//! Analytic signal generators with controllable nonlinearity.

mod ensemble;
mod mixing;
mod modal;
mod noise;
mod rc1;

use thiserror::Error;

use crate::waveform::WaveformError;

pub use ensemble::{EnsembleError, PlateEnsemble, PAIR_LAYOUT, PLATE_LABELS};
pub use mixing::{
    exact_bin_frequency, hertzian_mix_waveform, quadratic_mix_waveform, HertzianMixSpec,
    QuadraticMixSpec, Tone,
};
pub use modal::{modal_plate_response, Mode, ModalPlateSpec, Nonlinearity, NonlinearityKind};
pub use noise::NoiseSource;
pub use rc1::{rc1_waveform, Rc1Pulse};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("duration {duration} s is shorter than one carrier period {period} s")]
    DurationTooShort { duration: f64, period: f64 },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Waveform(#[from] WaveformError),
}

/// Number of samples covering `duration` at `sample_rate`, rounded to nearest.
pub fn sample_count(duration: f64, sample_rate: f64) -> usize {
    (duration * sample_rate).round() as usize
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), SynthError> {
    if cond {
        Ok(())
    } else {
        Err(SynthError::InvalidSpec(msg()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_count_conventions() {
        assert_eq!(sample_count(804e-6, 12.5e6), 10050);
        assert_eq!(sample_count(803.84e-6, 12.5e6), 10048);
    }
}
