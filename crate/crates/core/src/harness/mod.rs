//! Experiment pipelines: detuning scans, signal and meter power sweeps,
//! shot-noise characterisation and the design extrapolation.
//!
//! Grid points and seeds are independent tasks run on the rayon pool. Every
//! random draw comes from a stream keyed by `(seed, point index)`, and results
//! are assembled in axis order, so outputs do not depend on the thread count.

mod design;
mod noise;
mod scan;
mod sweep;

pub use design::{extrapolate_design, DesignParams, DesignReport};
pub use noise::{run_noise_characterization, NoiseConfig, NoiseReport, NoiseRow};
pub use scan::{ScanConfig, ScanResult};
pub use sweep::{log_grid, SaturationFit, SweepAxis, SweepConfig, SweepResult};

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::detection::{DetectorModel, ToneConfig, DEFAULT_TIME_CONSTANT};
use crate::kerr_engine::{KerrEngine, SaturationPowers, DEFAULT_RATIO_FLOOR};

/// Two-photon detuning of the detuned operating point, rad/s.
pub const DETUNED_POINT: f64 = -TAU * 35e6;

/// Where on the spectrum a sweep is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatingPoint {
    #[serde(rename = "max_phase")]
    MaxPhase,
    #[serde(rename = "detuned_minus_35MHz")]
    DetunedMinus35MHz,
}

impl OperatingPoint {
    pub fn label(self) -> &'static str {
        match self {
            OperatingPoint::MaxPhase => "max_phase",
            OperatingPoint::DetunedMinus35MHz => "detuned_minus_35MHz",
        }
    }
}

/// Heterodyne detection used when a pipeline simulates the lock-in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSettings {
    pub tones: ToneConfig,
    pub detector: DetectorModel,
    pub time_constant: f64,
}

impl Default for DetectionSettings {
    fn default() -> Self {
        Self {
            tones: ToneConfig::default(),
            detector: DetectorModel::default(),
            time_constant: DEFAULT_TIME_CONSTANT,
        }
    }
}

/// Calibrated engine plus the settings every pipeline shares.
#[derive(Debug, Clone)]
pub struct Harness {
    pub engine: KerrEngine,
    /// Saturation powers used at the detuned operating point.
    pub detuned_saturation: SaturationPowers,
    pub detection: DetectionSettings,
    pub ratio_floor: f64,
}

impl Harness {
    pub fn new(engine: KerrEngine) -> Self {
        Self {
            engine,
            detuned_saturation: SaturationPowers::DETUNED,
            detection: DetectionSettings::default(),
            ratio_floor: DEFAULT_RATIO_FLOOR,
        }
    }

    /// Detuning and saturation powers of an operating point.
    pub fn operating_point(&self, op: OperatingPoint) -> (f64, SaturationPowers) {
        match op {
            OperatingPoint::MaxPhase => (self.engine.max_phase_detuning(), self.engine.calibration().saturation()),
            OperatingPoint::DetunedMinus35MHz => (DETUNED_POINT, self.detuned_saturation),
        }
    }
}

/// 95 % two-sided normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
