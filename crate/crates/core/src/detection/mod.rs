//! Dual-tone heterodyne detection: beat-note synthesis with photon shot
//! noise, lock-in demodulation against the pre-fibre reference, and phase
//! noise floors.

mod lockin;
mod synth;
mod timeseries;

pub use lockin::{wrap_phase, Demodulated, Lockin, LockinResult};
pub use synth::{synthesize_beatnote, DetectorModel, Noise, ToneConfig};
pub use timeseries::{TimeSeries, TIMESERIES_MAGIC};

use crate::error::{ensure_finite, ensure_positive, Error, Result};

/// Default lock-in time constant (s).
pub const DEFAULT_TIME_CONSTANT: f64 = 10e-6;

const FLOOR_AT_1UW: f64 = 7e-5;

/// Measured phase noise spectral density of the apparatus, 7e-5/√(P/1 µW) rad/√Hz.
pub fn shot_noise_floor(p_met: f64) -> Result<f64> {
    if !(p_met.is_finite() && p_met > 0.0) {
        return Err(Error::domain(format!("meter power must be positive, got {p_met}")));
    }
    Ok(FLOOR_AT_1UW / (p_met / 1e-6).sqrt())
}

/// Shot-noise phase spectral density (rad/√Hz) of the demodulated relative
/// phase, predicted from the tone powers and detector efficiency. Both the
/// reference and the signal channel contribute 4Φ_dc/Φ_beat², with Φ the
/// detected photon rates; `transmission` scales tone b in the signal channel.
pub fn predicted_phase_psd(tones: &ToneConfig, det: &DetectorModel, transmission: f64) -> Result<f64> {
    tones.validate()?;
    ensure_positive("transmission", transmission)?;
    let rate = det.quantum_efficiency / tones.photon_energy();
    let channel = |pa: f64, pb: f64| {
        let dc = rate * (pa + pb);
        let beat = rate * 2.0 * (pa * pb).sqrt();
        4.0 * dc / (beat * beat)
    };
    let psd2 = channel(tones.p_tone_a, tones.p_tone_b) + channel(tones.p_tone_a, tones.p_tone_b * transmission);
    if !psd2.is_finite() {
        return Err(Error::domain("a tone has zero power, so there is no beat"));
    }
    Ok(psd2.sqrt())
}

/// What the fibre does to the meter tones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Cross-phase on the interacting tone (b).
    pub cross_phase: f64,
    /// Phase added to both tones, e.g. self-phase modulation.
    pub common_phase: f64,
    /// Power transmission of the interacting tone.
    pub transmission: f64,
}

impl Measurement {
    pub fn phase_only(cross_phase: f64) -> Self {
        Self {
            cross_phase,
            common_phase: 0.0,
            transmission: 1.0,
        }
    }
}

/// End-to-end measurement: both tones at `p_met`, reference beat before the
/// fibre, signal beat after it, lock-in comparison of the two.
///
/// `trial` of `None` is noiseless; `Some(k)` draws shot noise from streams
/// 2k (reference) and 2k+1 (signal) under the detector seed.
pub fn measure_cross_phase(
    m: &Measurement,
    p_met: f64,
    tones: &ToneConfig,
    det: &DetectorModel,
    time_constant: f64,
    trial: Option<u64>,
) -> Result<LockinResult> {
    ensure_finite("cross_phase", m.cross_phase)?;
    ensure_finite("common_phase", m.common_phase)?;
    if !(m.transmission.is_finite() && m.transmission >= 0.0) {
        return Err(Error::domain(format!(
            "transmission must be nonnegative, got {}",
            m.transmission
        )));
    }
    ensure_positive("p_met", p_met)?;
    let lockin = Lockin::new(tones.offset_freq, time_constant)?;
    let before = ToneConfig {
        p_tone_a: p_met,
        p_tone_b: p_met,
        ..*tones
    };
    let after = ToneConfig {
        p_tone_b: p_met * m.transmission,
        phase_a: before.phase_a + m.common_phase,
        phase_b: before.phase_b + m.common_phase + m.cross_phase,
        ..before
    };
    let (ref_noise, sig_noise) = match trial {
        None => (Noise::Off, Noise::Off),
        Some(k) => (Noise::Shot { stream: 2 * k }, Noise::Shot { stream: 2 * k + 1 }),
    };
    let reference = synthesize_beatnote(&before, det, ref_noise)?;
    let signal = synthesize_beatnote(&after, det, sig_noise)?;
    lockin.demodulate(&signal, &reference)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rayon::prelude::*;

    use super::*;

    fn fast_det() -> DetectorModel {
        DetectorModel {
            duration: 20e-6,
            rng_seed: 11,
            ..DetectorModel::default()
        }
    }

    const TAU_FAST: f64 = 2e-6;

    fn ensemble_std(p_met: f64, det: &DetectorModel, trials: u64) -> (f64, f64) {
        let tones = ToneConfig::default();
        let phases: Vec<(f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|k| {
                let r =
                    measure_cross_phase(&Measurement::phase_only(0.3), p_met, &tones, det, TAU_FAST, Some(k)).unwrap();
                (r.phase, r.phase_std)
            })
            .collect();
        let n = phases.len() as f64;
        let mean = phases.iter().map(|p| p.0).sum::<f64>() / n;
        let var = phases.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var.sqrt(), phases[0].1)
    }

    #[test]
    fn floor_formula() {
        assert_eq!(shot_noise_floor(1e-6).unwrap(), 7e-5);
        assert!((shot_noise_floor(49e-6).unwrap() - 1e-5).abs() < 1e-18);
        for p in [1e-9, 3.3e-6, 0.2] {
            let r = shot_noise_floor(4.0 * p).unwrap() / shot_noise_floor(p).unwrap();
            assert!((r - 0.5).abs() < 1e-15);
        }
        assert!(shot_noise_floor(0.0).is_err());
        assert!(shot_noise_floor(-1e-6).is_err());
    }

    #[test]
    fn predicted_psd_closed_form() {
        // equal tones, no loss: PSD² = 2 channels × 2ħω/(ηP)
        let tones = ToneConfig::default();
        let det = DetectorModel::default();
        let psd = predicted_phase_psd(&tones, &det, 1.0).unwrap();
        let expect = (4.0 * tones.photon_energy() / (0.04 * 1e-6)).sqrt();
        assert!((psd / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_measurement_is_exact() {
        let tones = ToneConfig::default();
        for inj in [0.0, 0.5, -1.2, PI] {
            let r =
                measure_cross_phase(&Measurement::phase_only(inj), 1e-6, &tones, &fast_det(), TAU_FAST, None).unwrap();
            assert!((r.phase - wrap_phase(inj)).abs() < 1e-9, "{inj}: {}", r.phase);
        }
    }

    #[test]
    fn common_phase_is_rejected() {
        let tones = ToneConfig::default();
        let base = measure_cross_phase(&Measurement::phase_only(0.7), 1e-6, &tones, &fast_det(), TAU_FAST, None)
            .unwrap()
            .phase;
        for psi in [0.0, 1.0, 2.0, 3.0, 6.0] {
            let m = Measurement {
                cross_phase: 0.7,
                common_phase: psi,
                transmission: 0.4,
            };
            let r = measure_cross_phase(&m, 1e-6, &tones, &fast_det(), TAU_FAST, None).unwrap();
            assert!((r.phase - base).abs() < 1e-9, "ψ = {psi}: {} vs {base}", r.phase);
            assert!((r.amplitude - 0.4f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn noisy_runs_are_deterministic() {
        let tones = ToneConfig::default();
        let run = |k| {
            measure_cross_phase(
                &Measurement::phase_only(0.2),
                1e-6,
                &tones,
                &fast_det(),
                TAU_FAST,
                Some(k),
            )
            .unwrap()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn monte_carlo_std_matches_prediction() {
        let det = fast_det();
        let (std, estimate) = ensemble_std(1e-6, &det, 100);
        let lockin = Lockin::new(80e6, TAU_FAST).unwrap();
        let predicted =
            predicted_phase_psd(&ToneConfig::default(), &det, 1.0).unwrap() * lockin.noise_bandwidth().sqrt();
        assert!((std / predicted - 1.0).abs() < 0.10, "std {std}, predicted {predicted}");
        assert!(
            (estimate / predicted - 1.0).abs() < 0.05,
            "estimate {estimate}, predicted {predicted}"
        );
    }

    #[test]
    fn std_scales_with_inverse_root_efficiency() {
        let hi = DetectorModel {
            quantum_efficiency: 0.64,
            ..fast_det()
        };
        let (s_lo, _) = ensemble_std(1e-6, &fast_det(), 200);
        let (s_hi, _) = ensemble_std(1e-6, &hi, 200);
        // η up 16× → std down 4×
        assert!((s_lo / s_hi / 4.0 - 1.0).abs() < 0.15, "{}", s_lo / s_hi);
    }

    #[test]
    fn poisson_counts_approach_gaussian_at_high_rate() {
        // 1 mW single tone: ~1.6e5 photons per sample
        let tones = ToneConfig {
            p_tone_a: 1e-3,
            p_tone_b: 0.0,
            ..ToneConfig::default()
        };
        let det = DetectorModel {
            duration: 20e-6,
            ..DetectorModel::default()
        };
        let mu = synthesize_beatnote(&tones, &det, Noise::Off).unwrap().samples[0];
        let s = synthesize_beatnote(&tones, &det, Noise::Shot { stream: 0 })
            .unwrap()
            .samples;
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let skew = s.iter().map(|x| ((x - mean) / var.sqrt()).powi(3)).sum::<f64>() / n;
        let kurt = s.iter().map(|x| ((x - mean) / var.sqrt()).powi(4)).sum::<f64>() / n - 3.0;
        assert!((mean / mu - 1.0).abs() < 1e-3);
        assert!((var / mu - 1.0).abs() < 0.05);
        // standard errors at n = 2e4: skew ≈ 0.017, excess kurtosis ≈ 0.035
        assert!(skew.abs() < 0.06, "skew {skew}");
        assert!(kurt.abs() < 0.12, "kurtosis {kurt}");
    }
}
