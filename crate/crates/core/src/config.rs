//! JSON run configuration.
//!
//! Every field has a default, so `{}` is a complete config. Unknown keys are
//! rejected. Frequencies are ordinary frequencies in Hz (`*_hz`) and are
//! converted to angular units when the engine is built.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atomic_model::linear_grid;
use crate::atomic_model::{
    AtomicConstants, HyperfineManifold, LineshapeParams, ManifoldShape, ManifoldTable, DEFAULT_GAMMA_L,
    DEFAULT_SIGMA_G, HBAR, RB_5P32_LINEWIDTH_HZ, SPEED_OF_LIGHT,
};
use crate::detection::{DetectorModel, ToneConfig};
use crate::error::{Error, Result};
use crate::harness::{
    log_grid, DesignParams, DetectionSettings, Harness, NoiseConfig, OperatingPoint, ScanConfig, SweepAxis, SweepConfig,
};
use crate::kerr_engine::{
    AbsorptionAnchor, BeamPowers, CalibrationAnchors, FiberCell, KerrCalibration, KerrEngine, PhaseAnchor,
    SaturationPowers, DEFAULT_DENSITY, DEFAULT_RATIO_FLOOR,
};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub atomic: AtomicSection,
    pub manifold: ManifoldTable,
    pub lineshape: LineshapeSection,
    pub fiber: FiberSection,
    pub calibration: CalibrationSection,
    pub detection: DetectionSection,
    pub scan: ScanSection,
    pub signal_sweep: SignalSweepSection,
    pub meter_sweep: MeterSweepSection,
    pub noise: NoiseSection,
    pub design: DesignSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("xpmsim-out"),
            atomic: AtomicSection::default(),
            manifold: ManifoldTable::rb85_5d52(),
            lineshape: LineshapeSection::default(),
            fiber: FiberSection::default(),
            calibration: CalibrationSection::default(),
            detection: DetectionSection::default(),
            scan: ScanSection::default(),
            signal_sweep: SignalSweepSection::default(),
            meter_sweep: MeterSweepSection::default(),
            noise: NoiseSection::default(),
            design: DesignSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomicSection {
    pub lambda_met_m: f64,
    pub lambda_sig_m: f64,
    pub gamma_i_hz: f64,
    pub gamma_e_hz: f64,
    pub delta_i_hz: f64,
}

impl Default for AtomicSection {
    fn default() -> Self {
        Self {
            lambda_met_m: 780e-9,
            lambda_sig_m: 776e-9,
            gamma_i_hz: RB_5P32_LINEWIDTH_HZ,
            gamma_e_hz: 10e6,
            delta_i_hz: 1.2e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineshapeSection {
    /// Lorentzian half width, Hz.
    pub gamma_l_hz: f64,
    /// Gaussian standard deviation, Hz.
    pub sigma_g_hz: f64,
}

impl Default for LineshapeSection {
    fn default() -> Self {
        Self {
            gamma_l_hz: DEFAULT_GAMMA_L / TAU,
            sigma_g_hz: DEFAULT_SIGMA_G / TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberSection {
    pub length_m: f64,
    pub core_diameter_m: f64,
    /// Effective mode area; the geometric core area when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_area_m2: Option<f64>,
    pub density_m3: f64,
}

impl Default for FiberSection {
    fn default() -> Self {
        Self {
            length_m: 0.20,
            core_diameter_m: 45e-6,
            mode_area_m2: None,
            density_m3: DEFAULT_DENSITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub phase_rad: f64,
    pub phase_p_sig_w: f64,
    pub phase_p_met_w: f64,
    pub absorption: f64,
    pub absorption_p_met_w: f64,
    pub max_phase_saturation_w: SaturationPowers,
    pub detuned_saturation_w: SaturationPowers,
    pub ratio_floor: f64,
    /// A calibration JSON to use instead of solving from the anchors.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            phase_rad: PI,
            phase_p_sig_w: 25e-6,
            phase_p_met_w: 1e-6,
            absorption: 0.70,
            absorption_p_met_w: 0.0,
            max_phase_saturation_w: SaturationPowers::MAX_PHASE,
            detuned_saturation_w: SaturationPowers::DETUNED,
            ratio_floor: DEFAULT_RATIO_FLOOR,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub offset_freq_hz: f64,
    pub wavelength_m: f64,
    pub quantum_efficiency: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub time_constant_s: f64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        let tones = ToneConfig::default();
        let det = DetectorModel::default();
        Self {
            offset_freq_hz: tones.offset_freq,
            wavelength_m: tones.wavelength,
            quantum_efficiency: det.quantum_efficiency,
            sample_rate_hz: det.sample_rate,
            duration_s: det.duration,
            time_constant_s: crate::detection::DEFAULT_TIME_CONSTANT,
        }
    }
}

/// A seed count (seeds derived from the run seed) or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    /// Count `n` expands to `derive_seed(run_seed, k)` for k in 0..n.
    pub fn expand(&self, run_seed: u64) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).map(|k| derive_seed(run_seed, k)).collect(),
            Seeds::List(v) => v.clone(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Seeds::Count(n) => *n == 0,
            Seeds::List(v) => v.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub min_detuning_hz: f64,
    pub max_detuning_hz: f64,
    pub points: usize,
    pub p_met_w: f64,
    pub p_sig_w: f64,
    pub detection_noise: bool,
    pub seeds: Seeds,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            min_detuning_hz: -80e6,
            max_detuning_hz: 80e6,
            points: 801,
            p_met_w: 1e-6,
            p_sig_w: 45e-6,
            detection_noise: false,
            seeds: Seeds::Count(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSweepSection {
    pub values_w: Vec<f64>,
    /// One sweep per meter power.
    pub meter_powers_w: Vec<f64>,
    pub operating_points: Vec<OperatingPoint>,
    pub relative_noise: f64,
    pub seeds: Seeds,
}

impl Default for SignalSweepSection {
    fn default() -> Self {
        Self {
            values_w: log_grid(0.5e-6, 50e-6, 13),
            meter_powers_w: vec![1e-6, 10e-6, 30e-6],
            operating_points: vec![OperatingPoint::MaxPhase, OperatingPoint::DetunedMinus35MHz],
            relative_noise: 0.0,
            seeds: Seeds::Count(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeterSweepSection {
    pub values_w: Vec<f64>,
    pub signal_power_w: f64,
    pub operating_points: Vec<OperatingPoint>,
    pub relative_noise: f64,
    pub seeds: Seeds,
}

impl Default for MeterSweepSection {
    fn default() -> Self {
        Self {
            values_w: log_grid(0.3e-6, 100e-6, 13),
            signal_power_w: 25e-6,
            operating_points: vec![OperatingPoint::MaxPhase, OperatingPoint::DetunedMinus35MHz],
            relative_noise: 0.1,
            seeds: Seeds::Count(100),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub p_met_w: Vec<f64>,
    pub trials_per_power: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let d = NoiseConfig::default();
        Self {
            p_met_w: d.p_met_values,
            trials_per_power: d.trials_per_power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignSection {
    pub core_factor: f64,
    pub density_factor: f64,
    pub length_factor: f64,
    pub qe_new: f64,
    pub baseline_phi_ph: f64,
}

impl Default for DesignSection {
    fn default() -> Self {
        let d = DesignParams::default();
        Self {
            core_factor: d.core_factor,
            density_factor: d.density_factor,
            length_factor: d.length_factor,
            qe_new: d.qe_new,
            baseline_phi_ph: d.baseline_phi_ph,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be nonnegative, got {v}")))
    }
}

fn all_positive(field: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(field, "must not be empty"));
    }
    for (i, v) in values.iter().enumerate() {
        positive(&format!("{field}[{i}]"), *v)?;
    }
    Ok(())
}

/// Re-labels a construction error as an invalid value of `field`.
fn at<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::ConfigInvalid { .. } => e,
        other => Error::invalid(field, other.to_string()),
    })
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::ConfigMissing(path.to_path_buf())),
        Err(e) => return Err(e.into()),
    };
    RunConfig::from_json(&text)
}

impl RunConfig {
    /// Parses and validates; unknown keys and wrong types are syntax errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::ConfigSyntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical compact JSON with every default filled in.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON without `output_dir`, hex. Where the
    /// files go does not change what is in them.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    /// Checks every section and that the engine can be built.
    pub fn validate(&self) -> Result<()> {
        let a = &self.atomic;
        positive("atomic.lambda_met_m", a.lambda_met_m)?;
        positive("atomic.lambda_sig_m", a.lambda_sig_m)?;
        positive("atomic.gamma_i_hz", a.gamma_i_hz)?;
        positive("atomic.gamma_e_hz", a.gamma_e_hz)?;
        positive("atomic.delta_i_hz", a.delta_i_hz)?;
        at("manifold", self.manifold_model())?;
        positive("lineshape.gamma_l_hz", self.lineshape.gamma_l_hz)?;
        nonnegative("lineshape.sigma_g_hz", self.lineshape.sigma_g_hz)?;

        let f = &self.fiber;
        positive("fiber.length_m", f.length_m)?;
        positive("fiber.core_diameter_m", f.core_diameter_m)?;
        if let Some(area) = f.mode_area_m2 {
            positive("fiber.mode_area_m2", area)?;
        }
        positive("fiber.density_m3", f.density_m3)?;

        let c = &self.calibration;
        positive("calibration.phase_rad", c.phase_rad)?;
        positive("calibration.phase_p_sig_w", c.phase_p_sig_w)?;
        nonnegative("calibration.phase_p_met_w", c.phase_p_met_w)?;
        if !(c.absorption > 0.0 && c.absorption < 1.0) {
            return Err(Error::invalid(
                "calibration.absorption",
                format!("must lie in (0, 1), got {}", c.absorption),
            ));
        }
        nonnegative("calibration.absorption_p_met_w", c.absorption_p_met_w)?;
        positive(
            "calibration.max_phase_saturation_w.phase",
            c.max_phase_saturation_w.phase,
        )?;
        positive(
            "calibration.max_phase_saturation_w.absorption",
            c.max_phase_saturation_w.absorption,
        )?;
        positive("calibration.detuned_saturation_w.phase", c.detuned_saturation_w.phase)?;
        positive(
            "calibration.detuned_saturation_w.absorption",
            c.detuned_saturation_w.absorption,
        )?;
        nonnegative("calibration.ratio_floor", c.ratio_floor)?;

        let d = &self.detection;
        positive("detection.offset_freq_hz", d.offset_freq_hz)?;
        positive("detection.wavelength_m", d.wavelength_m)?;
        if !(d.quantum_efficiency > 0.0 && d.quantum_efficiency <= 1.0) {
            return Err(Error::invalid(
                "detection.quantum_efficiency",
                format!("must lie in (0, 1], got {}", d.quantum_efficiency),
            ));
        }
        positive("detection.sample_rate_hz", d.sample_rate_hz)?;
        positive("detection.duration_s", d.duration_s)?;
        positive("detection.time_constant_s", d.time_constant_s)?;
        let settings = self.detection_settings();
        at("detection", settings.detector.validate(settings.tones.offset_freq))?;
        at(
            "detection.time_constant_s",
            crate::detection::Lockin::new(d.offset_freq_hz, d.time_constant_s).map(|_| ()),
        )?;

        let s = &self.scan;
        if !(s.min_detuning_hz.is_finite() && s.max_detuning_hz.is_finite() && s.min_detuning_hz < s.max_detuning_hz) {
            return Err(Error::invalid(
                "scan.max_detuning_hz",
                "must exceed scan.min_detuning_hz",
            ));
        }
        if s.points < 2 {
            return Err(Error::invalid(
                "scan.points",
                format!("must be at least 2, got {}", s.points),
            ));
        }
        nonnegative("scan.p_met_w", s.p_met_w)?;
        nonnegative("scan.p_sig_w", s.p_sig_w)?;
        if s.seeds.is_empty() {
            return Err(Error::invalid("scan.seeds", "must not be empty"));
        }

        let ss = &self.signal_sweep;
        all_positive("signal_sweep.values_w", &ss.values_w)?;
        if ss.meter_powers_w.is_empty() {
            return Err(Error::invalid("signal_sweep.meter_powers_w", "must not be empty"));
        }
        for (i, v) in ss.meter_powers_w.iter().enumerate() {
            nonnegative(&format!("signal_sweep.meter_powers_w[{i}]"), *v)?;
        }
        if ss.operating_points.is_empty() {
            return Err(Error::invalid("signal_sweep.operating_points", "must not be empty"));
        }
        nonnegative("signal_sweep.relative_noise", ss.relative_noise)?;
        if ss.seeds.is_empty() {
            return Err(Error::invalid("signal_sweep.seeds", "must not be empty"));
        }

        let ms = &self.meter_sweep;
        all_positive("meter_sweep.values_w", &ms.values_w)?;
        if ms.values_w.len() < 3 {
            return Err(Error::invalid(
                "meter_sweep.values_w",
                "needs at least 3 powers to fit a saturation law",
            ));
        }
        nonnegative("meter_sweep.signal_power_w", ms.signal_power_w)?;
        if ms.operating_points.is_empty() {
            return Err(Error::invalid("meter_sweep.operating_points", "must not be empty"));
        }
        nonnegative("meter_sweep.relative_noise", ms.relative_noise)?;
        if ms.seeds.is_empty() {
            return Err(Error::invalid("meter_sweep.seeds", "must not be empty"));
        }

        all_positive("noise.p_met_w", &self.noise.p_met_w)?;
        if self.noise.p_met_w.len() < 2 {
            return Err(Error::invalid("noise.p_met_w", "needs at least 2 powers"));
        }
        if self.noise.trials_per_power < 2 {
            return Err(Error::invalid("noise.trials_per_power", "must be at least 2"));
        }

        let g = &self.design;
        positive("design.core_factor", g.core_factor)?;
        positive("design.density_factor", g.density_factor)?;
        positive("design.length_factor", g.length_factor)?;
        positive("design.baseline_phi_ph", g.baseline_phi_ph)?;
        at("design.qe_new", self.design_params().validate())?;

        if let Some(path) = &c.file {
            at("calibration.file", load_calibration(path))?;
        } else {
            at("calibration", self.calibration_anchors_check())?;
        }
        Ok(())
    }

    fn calibration_anchors_check(&self) -> Result<()> {
        crate::kerr_engine::calibrate(
            &self.calibration_anchors(),
            &self.atomic_constants(),
            &self.fiber_cell()?,
        )
        .map(|_| ())
    }

    pub fn atomic_constants(&self) -> AtomicConstants {
        let a = &self.atomic;
        AtomicConstants {
            lambda_met: a.lambda_met_m,
            lambda_sig: a.lambda_sig_m,
            gamma_i: TAU * a.gamma_i_hz,
            gamma_e: TAU * a.gamma_e_hz,
            delta_i: TAU * a.delta_i_hz,
            hbar: HBAR,
            c: SPEED_OF_LIGHT,
        }
    }

    pub fn manifold_model(&self) -> Result<HyperfineManifold> {
        HyperfineManifold::from_table(&self.manifold)
    }

    pub fn lineshape_params(&self) -> Result<LineshapeParams> {
        at(
            "lineshape",
            LineshapeParams::new(TAU * self.lineshape.gamma_l_hz, TAU * self.lineshape.sigma_g_hz),
        )
    }

    pub fn fiber_cell(&self) -> Result<FiberCell> {
        let f = &self.fiber;
        at(
            "fiber",
            match f.mode_area_m2 {
                Some(area) => FiberCell::with_mode_area(f.length_m, f.core_diameter_m, area, f.density_m3),
                None => FiberCell::new(f.length_m, f.core_diameter_m, f.density_m3),
            },
        )
    }

    pub fn calibration_anchors(&self) -> CalibrationAnchors {
        let c = &self.calibration;
        CalibrationAnchors {
            phase: PhaseAnchor {
                phase: c.phase_rad,
                p_sig: c.phase_p_sig_w,
                p_met: c.phase_p_met_w,
            },
            absorption: AbsorptionAnchor {
                absorption: c.absorption,
                p_met: c.absorption_p_met_w,
            },
            saturation: c.max_phase_saturation_w,
        }
    }

    pub fn engine(&self) -> Result<KerrEngine> {
        let consts = self.atomic_constants();
        let cell = self.fiber_cell()?;
        let shape = at(
            "manifold",
            ManifoldShape::new(self.manifold_model()?, self.lineshape_params()?),
        )?;
        match &self.calibration.file {
            Some(path) => KerrEngine::new(consts, cell, shape, at("calibration.file", load_calibration(path))?),
            None => at(
                "calibration",
                KerrEngine::calibrated(consts, cell, shape, &self.calibration_anchors()),
            ),
        }
    }

    pub fn detection_settings(&self) -> DetectionSettings {
        let d = &self.detection;
        DetectionSettings {
            tones: ToneConfig {
                offset_freq: d.offset_freq_hz,
                wavelength: d.wavelength_m,
                ..ToneConfig::default()
            },
            detector: DetectorModel {
                quantum_efficiency: d.quantum_efficiency,
                sample_rate: d.sample_rate_hz,
                duration: d.duration_s,
                rng_seed: self.seed,
            },
            time_constant: d.time_constant_s,
        }
    }

    pub fn harness(&self) -> Result<Harness> {
        let mut h = Harness::new(self.engine()?);
        h.detuned_saturation = self.calibration.detuned_saturation_w;
        h.detection = self.detection_settings();
        h.ratio_floor = self.calibration.ratio_floor;
        Ok(h)
    }

    pub fn scan_config(&self) -> ScanConfig {
        let s = &self.scan;
        ScanConfig {
            detuning_grid: linear_grid(TAU * s.min_detuning_hz, TAU * s.max_detuning_hz, s.points),
            powers: BeamPowers {
                p_met: s.p_met_w,
                p_sig: s.p_sig_w,
            },
            include_detection_noise: s.detection_noise,
            seeds: s.seeds.expand(self.seed),
        }
    }

    /// One sweep per (operating point, meter power), in config order.
    pub fn signal_sweeps(&self) -> Vec<SweepConfig> {
        let s = &self.signal_sweep;
        let seeds = s.seeds.expand(self.seed);
        s.operating_points
            .iter()
            .flat_map(|&op| {
                let seeds = seeds.clone();
                s.meter_powers_w.iter().map(move |&p_met| SweepConfig {
                    axis: SweepAxis::SignalPower,
                    values: s.values_w.clone(),
                    fixed_power: p_met,
                    operating_point: op,
                    relative_noise: s.relative_noise,
                    seeds: seeds.clone(),
                })
            })
            .collect()
    }

    pub fn meter_sweeps(&self) -> Vec<SweepConfig> {
        let s = &self.meter_sweep;
        let seeds = s.seeds.expand(self.seed);
        s.operating_points
            .iter()
            .map(|&op| SweepConfig {
                axis: SweepAxis::MeterPower,
                values: s.values_w.clone(),
                fixed_power: s.signal_power_w,
                operating_point: op,
                relative_noise: s.relative_noise,
                seeds: seeds.clone(),
            })
            .collect()
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            p_met_values: self.noise.p_met_w.clone(),
            trials_per_power: self.noise.trials_per_power,
            seed: self.seed,
        }
    }

    pub fn design_params(&self) -> DesignParams {
        let g = &self.design;
        DesignParams {
            core_factor: g.core_factor,
            density_factor: g.density_factor,
            length_factor: g.length_factor,
            qe_new: g.qe_new,
            baseline_phi_ph: g.baseline_phi_ph,
        }
    }
}

fn load_calibration(path: &Path) -> Result<KerrCalibration> {
    KerrCalibration::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.scan_config().detuning_grid.len(), 801);
        assert_eq!(cfg.meter_sweeps()[0].seeds.len(), 100);
        assert_eq!(cfg.signal_sweeps().len(), 6);
    }

    #[test]
    fn defaults_match_library_defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.atomic_constants(), AtomicConstants::default());
        assert_eq!(cfg.lineshape_params().unwrap(), LineshapeParams::default());
        assert_eq!(cfg.fiber_cell().unwrap(), FiberCell::default());
        assert_eq!(cfg.calibration_anchors(), CalibrationAnchors::default());
        assert_eq!(
            cfg.engine().unwrap().calibration(),
            KerrEngine::with_defaults().unwrap().calibration()
        );
        assert_eq!(cfg.design_params(), DesignParams::default());
    }

    #[test]
    fn negative_length_names_the_field() {
        let err = RunConfig::from_json(r#"{"fiber": {"length_m": -0.2}}"#).unwrap_err();
        match err {
            Error::ConfigInvalid { field, .. } => assert_eq!(field, "fiber.length_m"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_bad_syntax() {
        assert!(matches!(
            RunConfig::from_json(r#"{"fibre": {}}"#),
            Err(Error::ConfigSyntax(_))
        ));
        assert!(matches!(
            RunConfig::from_json(r#"{"fiber": {"length": 1}}"#),
            Err(Error::ConfigSyntax(_))
        ));
        assert!(matches!(RunConfig::from_json("{"), Err(Error::ConfigSyntax(_))));
    }

    #[test]
    fn hash_survives_round_trip() {
        let cfg = RunConfig::from_json(r#"{"seed": 9, "scan": {"points": 101}}"#).unwrap();
        let again = RunConfig::from_json(&cfg.canonical_json()).unwrap();
        assert_eq!(cfg.hash(), again.hash());
        assert_ne!(cfg.hash(), RunConfig::default().hash());
        assert_eq!(cfg.hash().len(), 64);
        let moved = RunConfig {
            output_dir: "elsewhere".into(),
            ..cfg.clone()
        };
        assert_eq!(moved.hash(), cfg.hash());
    }

    #[test]
    fn detection_invariants_are_checked() {
        let err = RunConfig::from_json(r#"{"detection": {"sample_rate_hz": 1e8}}"#).unwrap_err();
        assert!(
            matches!(err, Error::ConfigInvalid { ref field, .. } if field == "detection"),
            "{err}"
        );
        let err = RunConfig::from_json(r#"{"detection": {"time_constant_s": 1e-9}}"#).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "detection.time_constant_s"));
    }

    #[test]
    fn seeds_count_or_list() {
        let cfg = RunConfig::from_json(r#"{"scan": {"seeds": [4, 5]}}"#).unwrap();
        assert_eq!(cfg.scan_config().seeds, vec![4, 5]);
        let cfg = RunConfig::from_json(r#"{"seed": 3, "scan": {"seeds": 2}}"#).unwrap();
        assert_eq!(cfg.scan_config().seeds, vec![derive_seed(3, 0), derive_seed(3, 1)]);
        assert!(RunConfig::from_json(r#"{"scan": {"seeds": 0}}"#).is_err());
    }
}
