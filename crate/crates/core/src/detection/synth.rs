use std::f64::consts::TAU;

use rand_distr::{Distribution, Poisson};

use super::timeseries::TimeSeries;
use crate::atomic_model::{HBAR, SPEED_OF_LIGHT};
use crate::error::{ensure_finite, ensure_nonnegative, ensure_positive, Error, Result};
use crate::rng::stream_rng;

/// The two meter tones: powers, optical phases and their frequency offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneConfig {
    pub offset_freq: f64,
    pub p_tone_a: f64,
    pub p_tone_b: f64,
    pub phase_a: f64,
    pub phase_b: f64,
    pub wavelength: f64,
}

impl Default for ToneConfig {
    fn default() -> Self {
        Self::equal(1e-6)
    }
}

impl ToneConfig {
    /// Both tones at `p_met`, zero phases, 80 MHz apart at 780 nm.
    pub fn equal(p_met: f64) -> Self {
        Self {
            offset_freq: 80e6,
            p_tone_a: p_met,
            p_tone_b: p_met,
            phase_a: 0.0,
            phase_b: 0.0,
            wavelength: 780e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("offset_freq", self.offset_freq)?;
        ensure_nonnegative("p_tone_a", self.p_tone_a)?;
        ensure_nonnegative("p_tone_b", self.p_tone_b)?;
        ensure_finite("phase_a", self.phase_a)?;
        ensure_finite("phase_b", self.phase_b)?;
        ensure_positive("wavelength", self.wavelength)?;
        Ok(())
    }

    pub fn photon_energy(&self) -> f64 {
        HBAR * TAU * SPEED_OF_LIGHT / self.wavelength
    }
}

/// Photodetector and digitiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub quantum_efficiency: f64,
    pub sample_rate: f64,
    pub duration: f64,
    pub rng_seed: u64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            quantum_efficiency: 0.04,
            sample_rate: 1e9,
            duration: 100e-6,
            rng_seed: 0,
        }
    }
}

const MIN_SAMPLES: usize = 16;

impl DetectorModel {
    /// Checks the detector on its own and against the beat frequency.
    pub fn validate(&self, offset_freq: f64) -> Result<()> {
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::domain(format!(
                "quantum efficiency must lie in (0, 1], got {}",
                self.quantum_efficiency
            )));
        }
        ensure_positive("sample_rate", self.sample_rate)?;
        ensure_positive("duration", self.duration)?;
        if self.sample_rate <= 2.0 * offset_freq {
            return Err(Error::domain(format!(
                "sample rate {} Hz does not exceed the Nyquist rate {} Hz",
                self.sample_rate,
                2.0 * offset_freq
            )));
        }
        self.sample_count().map(|_| ())
    }

    /// duration·sample_rate, which must be a whole number of at least 16.
    pub fn sample_count(&self) -> Result<usize> {
        let n = self.duration * self.sample_rate;
        let rounded = n.round();
        if (n - rounded).abs() > 1e-9 * n.max(1.0) || rounded < MIN_SAMPLES as f64 {
            return Err(Error::domain(format!(
                "duration × sample rate must be an integer ≥ {MIN_SAMPLES}, got {n}"
            )));
        }
        Ok(rounded as usize)
    }
}

/// Whether the detector adds photon shot noise. `stream` selects an
/// independent random stream under the detector's seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Off,
    Shot { stream: u64 },
}

/// Detected photons per sample for the beat between the two tones.
///
/// The mean count follows η·[P_a + P_b + 2√(P_a·P_b)·cos(2πf·t + φ_b − φ_a)]·dt/ħω.
/// With shot noise each sample is an independent Poisson draw of that mean.
pub fn synthesize_beatnote(tones: &ToneConfig, det: &DetectorModel, noise: Noise) -> Result<TimeSeries> {
    tones.validate()?;
    det.validate(tones.offset_freq)?;
    let n = det.sample_count()?;
    let dt = 1.0 / det.sample_rate;
    let scale = det.quantum_efficiency * dt / tones.photon_energy();
    let dc = tones.p_tone_a + tones.p_tone_b;
    let beat = 2.0 * (tones.p_tone_a * tones.p_tone_b).sqrt();
    let rel_phase = tones.phase_b - tones.phase_a;
    let omega = TAU * tones.offset_freq;

    let means = (0..n).map(move |i| {
        let t = i as f64 * dt;
        (scale * (dc + beat * (omega * t + rel_phase).cos())).max(0.0)
    });

    let samples = match noise {
        Noise::Off => means.collect(),
        Noise::Shot { stream } => {
            let mut rng = stream_rng(det.rng_seed, stream);
            means
                .map(|mu| {
                    if mu > 0.0 {
                        Poisson::new(mu)
                            .map(|p| p.sample(&mut rng))
                            .map_err(|e| Error::domain(e.to_string()))
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    Ok(TimeSeries {
        sample_rate: det.sample_rate,
        samples,
    })
}
