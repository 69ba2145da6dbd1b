use rayon::prelude::*;

use super::{mean_and_sd, DetectionSettings};
use crate::detection::{
    measure_cross_phase, predicted_phase_psd, shot_noise_floor, DetectorModel, Lockin, Measurement,
};
use crate::error::{Error, Result};
use crate::fitting::{loglog_slope, LogLogFit};
use crate::rng::derive_seed;

/// Monte Carlo study of the demodulated phase noise against meter power.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub p_met_values: Vec<f64>,
    pub trials_per_power: usize,
    pub seed: u64,
}

impl Default for NoiseConfig {
    /// Five powers over three decades, 200 trials each.
    fn default() -> Self {
        Self {
            p_met_values: super::log_grid(0.1e-6, 100e-6, 5),
            trials_per_power: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRow {
    pub p_met: f64,
    /// Standard deviation of the recovered phase over trials, rad.
    pub mc_std: f64,
    /// Apparatus floor 7e-5/√(P/µW), rad/√Hz.
    pub floor_psd: f64,
    /// Shot-noise density predicted from η and the tone powers, rad/√Hz.
    pub predicted_psd: f64,
    /// `predicted_psd` times √ENBW of the lock-in, rad.
    pub predicted_std: f64,
    pub mc_over_predicted: f64,
    pub floor_over_predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub rows: Vec<NoiseRow>,
    pub noise_bandwidth: f64,
    /// Log-log fit of `mc_std` against meter power.
    pub scaling: LogLogFit,
}

/// Runs `trials_per_power` noisy measurements of a zero cross-phase at each
/// power. Power i seeds the detector with `derive_seed(seed, i)`; trial k uses
/// streams 2k and 2k+1.
pub fn run_noise_characterization(cfg: &NoiseConfig, settings: &DetectionSettings) -> Result<NoiseReport> {
    if cfg.p_met_values.len() < 2 {
        return Err(Error::domain("noise characterisation needs at least two powers"));
    }
    if let Some(p) = cfg.p_met_values.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::domain(format!("meter powers must be positive, got {p}")));
    }
    if cfg.trials_per_power < 2 {
        return Err(Error::domain("need at least two trials per power"));
    }
    let lockin = Lockin::new(settings.tones.offset_freq, settings.time_constant)?;
    let enbw = lockin.noise_bandwidth();

    let rows = cfg
        .p_met_values
        .iter()
        .enumerate()
        .map(|(i, &p_met)| {
            let det = DetectorModel {
                rng_seed: derive_seed(cfg.seed, i as u64),
                ..settings.detector
            };
            let phases = (0..cfg.trials_per_power as u64)
                .into_par_iter()
                .map(|k| {
                    measure_cross_phase(
                        &Measurement::phase_only(0.0),
                        p_met,
                        &settings.tones,
                        &det,
                        settings.time_constant,
                        Some(k),
                    )
                    .map(|r| r.phase)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (_, mc_std) = mean_and_sd(&phases);
            let tones = crate::detection::ToneConfig {
                p_tone_a: p_met,
                p_tone_b: p_met,
                ..settings.tones
            };
            let predicted_psd = predicted_phase_psd(&tones, &det, 1.0)?;
            let predicted_std = predicted_psd * enbw.sqrt();
            let floor_psd = shot_noise_floor(p_met)?;
            Ok(NoiseRow {
                p_met,
                mc_std,
                floor_psd,
                predicted_psd,
                predicted_std,
                mc_over_predicted: mc_std / predicted_std,
                floor_over_predicted: floor_psd / predicted_psd,
            })
        })
        .collect::<Result<Vec<NoiseRow>>>()?;

    let p: Vec<f64> = rows.iter().map(|r| r.p_met).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.mc_std).collect();
    Ok(NoiseReport {
        scaling: loglog_slope(&p, &s)?,
        rows,
        noise_bandwidth: enbw,
    })
}
