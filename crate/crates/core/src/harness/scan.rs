use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{mean_and_sd, Harness, Z95};
use crate::atomic_model::{check_grid, linear_grid};
use crate::detection::{measure_cross_phase, DetectorModel, Measurement};
use crate::error::{Error, Result};
use crate::kerr_engine::{BeamPowers, PhaseAbsorptionSpectrum};
use crate::rng::derive_seed;

/// Detuning scan at fixed powers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Two-photon detunings, rad/s, strictly increasing.
    pub detuning_grid: Vec<f64>,
    pub powers: BeamPowers,
    /// Recover each phase through the simulated lock-in instead of using the
    /// analytic value.
    pub include_detection_noise: bool,
    /// One spectrum per seed; spectra are averaged point by point.
    pub seeds: Vec<u64>,
}

impl Default for ScanConfig {
    /// 801 points over ±2π·80 MHz at 1 µW meter and 45 µW signal.
    fn default() -> Self {
        Self {
            detuning_grid: linear_grid(-TAU * 80e6, TAU * 80e6, 801),
            powers: BeamPowers {
                p_met: 1e-6,
                p_sig: 45e-6,
            },
            include_detection_noise: false,
            seeds: vec![0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Mean phase over seeds; the transmission column is always analytic.
    pub spectrum: PhaseAbsorptionSpectrum,
    /// Half-width of the 95 % interval on each mean phase; `None` when noiseless.
    pub ci_halfwidth: Vec<Option<f64>>,
    /// Shot-noise standard error of each mean phase predicted by the lock-in.
    pub predicted_std_error: Vec<Option<f64>>,
}

/// Adds the multiple of 2π that brings `recovered` closest to `expected`.
fn resolve_branch(recovered: f64, expected: f64) -> f64 {
    recovered + TAU * ((expected - recovered) / TAU).round()
}

impl Harness {
    /// Phase and transmission over the grid.
    ///
    /// With detection noise, each seed yields one lock-in-recovered spectrum:
    /// at point i the detector is seeded with `derive_seed(seed, i)`, tone b
    /// carries the analytic phase and transmission, and each recovered phase
    /// is placed on the 2π branch of the analytic one (as continuous phase
    /// tracking through a fine scan would) before averaging over seeds.
    pub fn run_spectrum_scan(&self, cfg: &ScanConfig) -> Result<ScanResult> {
        check_grid(&cfg.detuning_grid)?;
        cfg.powers.validate()?;
        if cfg.seeds.is_empty() {
            return Err(Error::domain("scan needs at least one seed"));
        }
        let analytic = self.engine.spectrum(&cfg.detuning_grid, cfg.powers, self.ratio_floor)?;
        let n_points = analytic.len();
        if !cfg.include_detection_noise {
            return Ok(ScanResult {
                spectrum: analytic,
                ci_halfwidth: vec![None; n_points],
                predicted_std_error: vec![None; n_points],
            });
        }

        let settings = self.detection;
        let recovered: Vec<(Vec<f64>, Vec<f64>)> = cfg
            .seeds
            .par_iter()
            .map(|&seed| {
                let rows = (0..n_points)
                    .into_par_iter()
                    .map(|i| {
                        let det = DetectorModel {
                            rng_seed: derive_seed(seed, i as u64),
                            ..settings.detector
                        };
                        let m = Measurement {
                            cross_phase: analytic.phase[i],
                            common_phase: 0.0,
                            transmission: analytic.transmission[i],
                        };
                        let r = measure_cross_phase(
                            &m,
                            cfg.powers.p_met,
                            &settings.tones,
                            &det,
                            settings.time_constant,
                            Some(0),
                        )?;
                        Ok((resolve_branch(r.phase, analytic.phase[i]), r.phase_std))
                    })
                    .collect::<Result<Vec<(f64, f64)>>>()?;
                Ok(rows.into_iter().unzip())
            })
            .collect::<Result<Vec<_>>>()?;

        let n_seeds = recovered.len() as f64;
        let mut phase = Vec::with_capacity(n_points);
        let mut ci = Vec::with_capacity(n_points);
        let mut se = Vec::with_capacity(n_points);
        for i in 0..n_points {
            let samples: Vec<f64> = recovered.iter().map(|(p, _)| p[i]).collect();
            let (mean, sd) = mean_and_sd(&samples);
            let predicted = recovered.iter().map(|(_, s)| s[i]).sum::<f64>() / n_seeds / n_seeds.sqrt();
            phase.push(mean);
            se.push(Some(predicted));
            ci.push(Some(if recovered.len() > 1 {
                Z95 * sd / n_seeds.sqrt()
            } else {
                Z95 * predicted
            }));
        }
        let spectrum =
            PhaseAbsorptionSpectrum::new(analytic.detunings, phase, analytic.transmission, self.ratio_floor)?;
        Ok(ScanResult {
            spectrum,
            ci_halfwidth: ci,
            predicted_std_error: se,
        })
    }
}
