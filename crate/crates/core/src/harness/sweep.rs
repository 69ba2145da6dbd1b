use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_and_sd, median, Harness, OperatingPoint, Z95};
use crate::error::{Error, Result};
use crate::fitting::{least_squares_fit, loglog_slope, FitProblem, LogLogFit, Model};
use crate::kerr_engine::BeamPowers;
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SignalPower,
    MeterPower,
}

impl SweepAxis {
    pub fn column(self) -> &'static str {
        match self {
            SweepAxis::SignalPower => "p_sig_w",
            SweepAxis::MeterPower => "p_met_w",
        }
    }
}

/// Power sweep at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    /// Swept powers, W. Sorted ascending before use.
    pub values: Vec<f64>,
    /// The power that is held fixed, W.
    pub fixed_power: f64,
    pub operating_point: OperatingPoint,
    /// Standard deviation of the multiplicative Gaussian noise applied to
    /// each phase and optical depth; 0 for exact values.
    pub relative_noise: f64,
    pub seeds: Vec<u64>,
}

/// `n` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * (ratio * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

impl SweepConfig {
    /// 13 signal powers over 0.5–50 µW at 1 µW meter, maximum-phase point.
    pub fn signal_default() -> Self {
        Self {
            axis: SweepAxis::SignalPower,
            values: log_grid(0.5e-6, 50e-6, 13),
            fixed_power: 1e-6,
            operating_point: OperatingPoint::MaxPhase,
            relative_noise: 0.0,
            seeds: vec![0],
        }
    }

    /// 13 meter powers over 0.3–100 µW at 25 µW signal, maximum-phase point.
    pub fn meter_default() -> Self {
        Self {
            axis: SweepAxis::MeterPower,
            values: log_grid(0.3e-6, 100e-6, 13),
            fixed_power: 25e-6,
            operating_point: OperatingPoint::MaxPhase,
            relative_noise: 0.0,
            seeds: vec![0],
        }
    }

    fn validate(&self, axis: SweepAxis) -> Result<Vec<f64>> {
        if self.axis != axis {
            return Err(Error::domain(format!(
                "sweep axis is {:?}, expected {axis:?}",
                self.axis
            )));
        }
        if self.values.is_empty() {
            return Err(Error::domain("sweep has no values"));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::domain(format!("sweep values must be positive, got {v}")));
        }
        if !(self.fixed_power.is_finite() && self.fixed_power >= 0.0) {
            return Err(Error::domain(format!(
                "fixed power must be nonnegative, got {}",
                self.fixed_power
            )));
        }
        if !(self.relative_noise.is_finite() && self.relative_noise >= 0.0) {
            return Err(Error::domain(format!(
                "relative noise must be nonnegative, got {}",
                self.relative_noise
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::domain("sweep needs at least one seed"));
        }
        let mut values = self.values.clone();
        values.sort_by(f64::total_cmp);
        if values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("sweep values must be distinct"));
        }
        Ok(values)
    }
}

/// Saturation powers fitted to a meter sweep, median over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationFit {
    pub phase_p_sat: f64,
    pub absorption_p_sat: f64,
    pub phase_p_sat_per_seed: Vec<f64>,
    pub absorption_p_sat_per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    /// Mean phase over seeds, rad.
    pub phase: Vec<f64>,
    /// Mean fractional absorption 1 − T over seeds.
    pub absorption: Vec<f64>,
    /// Half-width of the 95 % interval on the mean phase; `None` without noise.
    pub ci_halfwidths: Vec<Option<f64>>,
    pub operating_point: OperatingPoint,
    pub seeds: Vec<u64>,
    pub calibration_id: String,
    /// Log-log fit of |phase| against the signal power (signal sweeps).
    pub loglog: Option<LogLogFit>,
    /// Fitted saturation powers (meter sweeps).
    pub saturation: Option<SaturationFit>,
}

/// Per-seed (phase, optical depth) rows.
type Realisation = Vec<(f64, f64)>;

impl Harness {
    fn exact_rows(&self, cfg: &SweepConfig, values: &[f64]) -> Result<Realisation> {
        let (delta, sat) = self.operating_point(cfg.operating_point);
        values
            .par_iter()
            .map(|&v| {
                let powers = match cfg.axis {
                    SweepAxis::SignalPower => BeamPowers::new(cfg.fixed_power, v)?,
                    SweepAxis::MeterPower => BeamPowers::new(v, cfg.fixed_power)?,
                };
                let phase = self.engine.meter_phase_shift_with(powers, delta, sat)?;
                let od = -self.engine.transmission_with(powers, delta, sat)?.ln();
                Ok((phase, od))
            })
            .collect()
    }

    /// Exact rows with multiplicative noise drawn from the stream of
    /// `(seed, value index)`.
    fn realisations(&self, cfg: &SweepConfig, exact: &Realisation) -> Vec<Realisation> {
        if cfg.relative_noise == 0.0 {
            return vec![exact.clone(); cfg.seeds.len()];
        }
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                exact
                    .iter()
                    .enumerate()
                    .map(|(i, &(phase, od))| {
                        let mut rng = stream_rng(derive_seed(seed, i as u64), 0);
                        let n_phase: f64 = StandardNormal.sample(&mut rng);
                        let n_od: f64 = StandardNormal.sample(&mut rng);
                        (
                            phase * (1.0 + cfg.relative_noise * n_phase),
                            od * (1.0 + cfg.relative_noise * n_od),
                        )
                    })
                    .collect()
            })
            .collect()
    }

    fn assemble(&self, cfg: &SweepConfig, values: Vec<f64>, runs: &[Realisation]) -> SweepResult {
        let n = runs.len() as f64;
        let mut phase = Vec::with_capacity(values.len());
        let mut absorption = Vec::with_capacity(values.len());
        let mut ci = Vec::with_capacity(values.len());
        for i in 0..values.len() {
            let phases: Vec<f64> = runs.iter().map(|r| r[i].0).collect();
            let (mean, sd) = mean_and_sd(&phases);
            phase.push(mean);
            absorption.push(runs.iter().map(|r| 1.0 - (-r[i].1).exp()).sum::<f64>() / n);
            ci.push((cfg.relative_noise > 0.0 && runs.len() > 1).then(|| Z95 * sd / n.sqrt()));
        }
        SweepResult {
            axis: cfg.axis,
            axis_values: values,
            phase,
            absorption,
            ci_halfwidths: ci,
            operating_point: cfg.operating_point,
            seeds: cfg.seeds.clone(),
            calibration_id: self.engine.calibration().id(),
            loglog: None,
            saturation: None,
        }
    }

    /// Phase and absorption against signal power, with the log-log slope of
    /// |phase|.
    pub fn run_signal_sweep(&self, cfg: &SweepConfig) -> Result<SweepResult> {
        let values = cfg.validate(SweepAxis::SignalPower)?;
        let exact = self.exact_rows(cfg, &values)?;
        let runs = self.realisations(cfg, &exact);
        let mut result = self.assemble(cfg, values, &runs);
        if result.axis_values.len() >= 2 {
            let magnitude: Vec<f64> = result.phase.iter().map(|p| p.abs()).collect();
            result.loglog = Some(loglog_slope(&result.axis_values, &magnitude)?);
        }
        Ok(result)
    }

    /// Phase and absorption against meter power, with saturation powers from
    /// a 1/(1 + P/P_sat) fit to each seed's phase and optical depth.
    pub fn run_meter_sweep(&self, cfg: &SweepConfig) -> Result<SweepResult> {
        let values = cfg.validate(SweepAxis::MeterPower)?;
        let exact = self.exact_rows(cfg, &values)?;
        let runs = self.realisations(cfg, &exact);
        let fit_p_sat = |y: Vec<f64>| -> Result<f64> {
            let problem = FitProblem::with_initial_guess(values.clone(), y, None, &Model::SaturationLaw)?;
            let fit = least_squares_fit(&problem, None)?;
            Ok(fit.params[1])
        };
        let per_seed = runs
            .par_iter()
            .map(|run| {
                let phase_p = fit_p_sat(run.iter().map(|r| r.0.abs()).collect())?;
                let od_p = if run.iter().all(|r| r.1 > 0.0) {
                    fit_p_sat(run.iter().map(|r| r.1).collect())?
                } else {
                    f64::NAN
                };
                Ok((phase_p, od_p))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (mut phase_ps, mut od_ps): (Vec<f64>, Vec<f64>) = per_seed.into_iter().unzip();
        let phase_p_sat_per_seed = phase_ps.clone();
        let absorption_p_sat_per_seed = od_ps.clone();
        let saturation = SaturationFit {
            phase_p_sat: median(&mut phase_ps),
            absorption_p_sat: median(&mut od_ps),
            phase_p_sat_per_seed,
            absorption_p_sat_per_seed,
        };
        let mut result = self.assemble(cfg, values, &runs);
        result.saturation = Some(saturation);
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kerr_engine::KerrEngine;

    fn harness() -> Harness {
        Harness::new(KerrEngine::with_defaults().unwrap())
    }

    #[test]
    fn log_grid_ends() {
        let g = log_grid(0.5e-6, 50e-6, 13);
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], 0.5e-6);
        assert_eq!(g[12], 50e-6);
        assert!((g[6] / 5e-6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn signal_sweep_is_linear() {
        let h = harness();
        for p_met in [1e-6, 10e-6, 30e-6] {
            let cfg = SweepConfig {
                fixed_power: p_met,
                ..SweepConfig::signal_default()
            };
            let r = h.run_signal_sweep(&cfg).unwrap();
            assert!((r.loglog.unwrap().slope - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn signal_sweep_matches_engine_pointwise() {
        let h = harness();
        let cfg = SweepConfig::signal_default();
        let r = h.run_signal_sweep(&cfg).unwrap();
        let delta = h.engine.max_phase_detuning();
        for (p_sig, phase) in r.axis_values.iter().zip(&r.phase) {
            let direct = h
                .engine
                .meter_phase_shift(BeamPowers::new(1e-6, *p_sig).unwrap(), delta)
                .unwrap();
            assert!((phase - direct).abs() <= 1e-12 * direct.abs());
        }
    }

    #[test]
    fn order_of_values_does_not_matter() {
        let h = harness();
        let mut cfg = SweepConfig {
            relative_noise: 0.1,
            seeds: vec![1, 2, 3],
            ..SweepConfig::signal_default()
        };
        let a = h.run_signal_sweep(&cfg).unwrap();
        cfg.values.reverse();
        let b = h.run_signal_sweep(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn detuned_to_peak_ratio_is_negative_and_smaller() {
        let h = harness();
        let max = h.run_signal_sweep(&SweepConfig::signal_default()).unwrap();
        let det = h
            .run_signal_sweep(&SweepConfig {
                operating_point: OperatingPoint::DetunedMinus35MHz,
                ..SweepConfig::signal_default()
            })
            .unwrap();
        for (a, b) in det.phase.iter().zip(&max.phase) {
            let r = a / b;
            assert!(r < 0.0 && r.abs() < 1.0, "{r}");
        }
    }

    #[test]
    fn meter_sweep_recovers_saturation_powers() {
        let h = harness();
        for (op, p_sat) in [
            (OperatingPoint::MaxPhase, 3e-6),
            (OperatingPoint::DetunedMinus35MHz, 20e-6),
        ] {
            let cfg = SweepConfig {
                operating_point: op,
                ..SweepConfig::meter_default()
            };
            let s = h.run_meter_sweep(&cfg).unwrap().saturation.unwrap();
            assert!((s.phase_p_sat / p_sat - 1.0).abs() < 1e-6, "{op:?}: {}", s.phase_p_sat);
            assert!((s.absorption_p_sat / p_sat - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn weak_meter_limit_is_unsaturated() {
        let h = harness();
        let cfg = SweepConfig {
            values: vec![1e-12, 1e-6],
            ..SweepConfig::meter_default()
        };
        let r = h.run_meter_sweep(&cfg);
        // two points cannot constrain two parameters plus one
        assert!(r.is_err());
        let cfg = SweepConfig {
            values: vec![1e-12, 1e-9, 1e-6],
            ..SweepConfig::meter_default()
        };
        let r = h.run_meter_sweep(&cfg).unwrap();
        let unsat = 4.0 * std::f64::consts::PI / 3.0;
        assert!((r.phase[0] / unsat - 1.0).abs() < 1e-3);
    }

    #[test]
    fn wrong_axis_and_bad_values() {
        let h = harness();
        assert!(h.run_signal_sweep(&SweepConfig::meter_default()).is_err());
        let cfg = SweepConfig {
            values: vec![1e-6, -1e-6],
            ..SweepConfig::signal_default()
        };
        assert!(h.run_signal_sweep(&cfg).is_err());
        let cfg = SweepConfig {
            values: vec![1e-6, 1e-6],
            ..SweepConfig::signal_default()
        };
        assert!(h.run_signal_sweep(&cfg).is_err());
    }
}
