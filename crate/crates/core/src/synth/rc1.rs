use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require, sample_count, SynthError};
use crate::waveform::Waveform;

/// Single-cycle raised-cosine excitation pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rc1Pulse {
    pub u0: f64,
    pub fc: f64,
}

impl Rc1Pulse {
    pub fn value_at(&self, t: f64) -> f64 {
        if !(0.0..=1.0 / self.fc).contains(&t) {
            return 0.0;
        }
        let c = (2.0 * PI * self.fc * t).cos();
        -0.5 * (1.0 - c) * c * self.u0
    }
}

/// Sample the pulse from `t = 0` over `duration`; zero outside `[0, 1/fc]`.
pub fn rc1_waveform(p: &Rc1Pulse, sample_rate: f64, duration: f64) -> Result<Waveform, SynthError> {
    require(p.u0 > 0.0 && p.u0.is_finite(), || format!("u0 must be positive, got {}", p.u0))?;
    require(p.fc > 0.0 && p.fc.is_finite(), || format!("fc must be positive, got {}", p.fc))?;
    require(sample_rate > 0.0 && sample_rate.is_finite(), || {
        format!("sample rate must be positive, got {sample_rate}")
    })?;
    let period = 1.0 / p.fc;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(duration >= period) {
        return Err(SynthError::DurationTooShort { duration, period });
    }
    let n = sample_count(duration, sample_rate);
    let samples = (0..n)
        .map(|i| {
            // support test in the sample domain: i / rate <= 1 / fc  <=>  i * fc <= rate
            if i as f64 * p.fc <= sample_rate {
                p.value_at(i as f64 / sample_rate)
            } else {
                0.0
            }
        })
        .collect();
    Ok(Waveform::new(samples, sample_rate)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::magnitude_spectrum;

    const PULSE: Rc1Pulse = Rc1Pulse { u0: 1.0, fc: 500e3 };

    #[test]
    fn endpoints_and_midpoint() {
        let p = Rc1Pulse { u0: 2.5, fc: 500e3 };
        assert_eq!(p.value_at(0.0), 0.0);
        assert!(p.value_at(1.0 / p.fc).abs() < 1e-15);
        assert!((p.value_at(0.5 / p.fc) - 2.5).abs() < 1e-12);
        assert_eq!(p.value_at(-1e-9), 0.0);
        assert_eq!(p.value_at(1.0 / p.fc + 1e-9), 0.0);
    }

    #[test]
    fn support_is_one_period_of_25_samples() {
        let w = rc1_waveform(&PULSE, 12.5e6, 804e-6).unwrap();
        assert_eq!(w.len(), 10050);
        let s = w.samples();
        assert_eq!(s[0], 0.0);
        assert!(s[25].abs() < 1e-15);
        assert!(s[1..25].iter().all(|&v| v != 0.0));
        assert!(s[26..].iter().all(|&v| v == 0.0));
        assert!((s[12] - PULSE.value_at(12.0 / 12.5e6)).abs() < 1e-15);
    }

    #[test]
    fn spectrum_is_rather_flat_below_fc() {
        let w = rc1_waveform(&PULSE, 12.5e6, 803.84e-6).unwrap();
        let s = magnitude_spectrum(&w);
        let at = |f: f64| s.magnitudes()[(f / s.freq_step()).round() as usize];
        let ratio_db = 20.0 * (at(250e3) / at(50e3)).log10();
        assert!(ratio_db.abs() <= 6.0, "250 kHz vs 50 kHz: {ratio_db} dB");
    }

    #[test]
    fn too_short_duration_is_rejected() {
        assert!(matches!(
            rc1_waveform(&PULSE, 12.5e6, 1e-6),
            Err(SynthError::DurationTooShort { .. })
        ));
        assert!(rc1_waveform(&Rc1Pulse { u0: 0.0, fc: 1.0 }, 10.0, 2.0).is_err());
    }
}
