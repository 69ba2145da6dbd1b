use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use super::timeseries::TimeSeries;
use crate::error::{ensure_positive, Error, Result};

/// Output of a two-channel lock-in comparison.
///
/// `amplitude` is the signal beat amplitude relative to the reference beat
/// amplitude. `phase_std` is the shot-noise standard deviation of `phase`
/// predicted from the detected photon numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockinResult {
    pub amplitude: f64,
    pub phase: f64,
    pub phase_std: f64,
}

/// Digital IQ demodulator.
///
/// Each input is multiplied by 2·exp(−i·2πf·t), averaged over the shortest
/// window that spans a whole number of beat periods, then passed through a
/// single-pole low-pass filter. The filter state at the end of the record is
/// the complex beat amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lockin {
    pub reference_freq: f64,
    pub time_constant: f64,
}

/// Demodulated beat of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demodulated {
    /// Complex beat amplitude in photons per sample.
    pub phasor: Complex64,
    /// Mean detected photons per sample.
    pub mean: f64,
}

const MAX_WINDOW: usize = 100_000;

impl Lockin {
    pub fn new(reference_freq: f64, time_constant: f64) -> Result<Self> {
        ensure_positive("reference_freq", reference_freq)?;
        ensure_positive("time_constant", time_constant)?;
        if time_constant * reference_freq < 10.0 * (1.0 - 1e-12) {
            return Err(Error::domain(format!(
                "time constant {time_constant} s is shorter than 10 beat periods"
            )));
        }
        Ok(Self {
            reference_freq,
            time_constant,
        })
    }

    fn alpha(&self, sample_rate: f64) -> f64 {
        -(-1.0 / (sample_rate * self.time_constant)).exp_m1()
    }

    /// Samples in the shortest window holding an integer number of periods;
    /// 1 if no such window up to 100 000 samples exists.
    pub fn window(&self, sample_rate: f64) -> usize {
        let per_sample = self.reference_freq / sample_rate;
        (1..=MAX_WINDOW)
            .find(|&m| {
                let cycles = m as f64 * per_sample;
                cycles.round() >= 1.0 && (cycles - cycles.round()).abs() < 1e-9
            })
            .unwrap_or(1)
    }

    /// Sum of squared impulse-response weights of the boxcar plus single-pole
    /// chain in steady state, i.e. the variance gain for white input.
    pub fn variance_gain(&self, sample_rate: f64) -> f64 {
        let a = self.alpha(sample_rate);
        let m = self.window(sample_rate);
        let r = 1.0 - a;
        let mut sum = m as f64;
        let mut rd = 1.0;
        for d in 1..m {
            rd *= r;
            sum += 2.0 * (m - d) as f64 * rd;
        }
        a / (2.0 - a) * sum / (m * m) as f64
    }

    /// Equivalent noise bandwidth of the single-pole filter, 1/(4τ).
    pub fn noise_bandwidth(&self) -> f64 {
        1.0 / (4.0 * self.time_constant)
    }

    pub fn demodulate_one(&self, series: &TimeSeries) -> Result<Demodulated> {
        ensure_positive("sample_rate", series.sample_rate)?;
        let m = self.window(series.sample_rate);
        if series.len() < m {
            return Err(Error::domain(format!(
                "record of {} samples is shorter than the {m}-sample demodulation window",
                series.len()
            )));
        }
        if let Some(bad) = series.samples.iter().find(|s| !s.is_finite()) {
            return Err(Error::domain(format!("non-finite sample {bad}")));
        }
        let a = self.alpha(series.sample_rate);
        let mixed: Vec<Complex64> = series
            .samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                // reduce the angle before taking sin/cos to keep long records exact
                let cycles = (i as f64 * self.reference_freq / series.sample_rate).fract();
                2.0 * x * Complex64::from_polar(1.0, -TAU * cycles)
            })
            .collect();

        let inv_m = 1.0 / m as f64;
        let mut window: Complex64 = mixed[..m].iter().sum();
        let mut state = window * inv_m;
        for i in m..mixed.len() {
            window += mixed[i] - mixed[i - m];
            state += a * (window * inv_m - state);
        }
        Ok(Demodulated {
            phasor: state,
            mean: series.mean(),
        })
    }

    /// Relative phase φ_signal − φ_reference in (−π, π].
    pub fn demodulate(&self, signal: &TimeSeries, reference: &TimeSeries) -> Result<LockinResult> {
        if signal.sample_rate != reference.sample_rate {
            return Err(Error::domain(format!(
                "sample rates differ: signal {} Hz, reference {} Hz",
                signal.sample_rate, reference.sample_rate
            )));
        }
        let sig = self.demodulate_one(signal)?;
        let refr = self.demodulate_one(reference)?;
        let phase = wrap_phase((sig.phasor * refr.phasor.conj()).arg());
        let gain = self.variance_gain(signal.sample_rate);
        let var = |d: &Demodulated| {
            let b = d.phasor.norm();
            if b > 0.0 {
                2.0 * d.mean * gain / (b * b)
            } else {
                f64::INFINITY
            }
        };
        let ref_amp = refr.phasor.norm();
        Ok(LockinResult {
            amplitude: if ref_amp > 0.0 {
                sig.phasor.norm() / ref_amp
            } else {
                0.0
            },
            phase,
            phase_std: (var(&sig) + var(&refr)).sqrt(),
        })
    }
}

/// Maps an angle to (−π, π]; angles within 1e-9 of −π map to π.
pub fn wrap_phase(phi: f64) -> f64 {
    let mut w = phi.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    if w <= -PI + 1e-9 {
        w = PI;
    }
    w
}
