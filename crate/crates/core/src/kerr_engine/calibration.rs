use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cell::FiberCell;
use super::saturation_factor;
use crate::atomic_model::AtomicConstants;
use crate::error::{Error, Result};

/// Meter saturation powers (W) for phase and absorption at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationPowers {
    pub phase: f64,
    pub absorption: f64,
}

impl SaturationPowers {
    /// Onsets read off the meter-power saturation data at the maximum-phase point.
    pub const MAX_PHASE: SaturationPowers = SaturationPowers {
        phase: 3e-6,
        absorption: 3e-6,
    };
    /// Onsets at the detuned (−35 MHz) point.
    pub const DETUNED: SaturationPowers = SaturationPowers {
        phase: 20e-6,
        absorption: 20e-6,
    };
}

/// Lumped constants that turn the normalised lineshape into absolute phase and
/// optical depth.
///
/// All fields are SI: `coupling_c` in m²/W (an effective n₂ at the dispersion
/// extremum), `peak_od` dimensionless, saturation powers in W. The saturation
/// powers are those of the maximum-phase operating point and are used for any
/// detuning unless a caller supplies others.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrCalibration {
    pub coupling_c: f64,
    pub peak_od: f64,
    pub p_sat_phase: f64,
    pub p_sat_abs: f64,
}

impl KerrCalibration {
    pub fn validate(&self) -> Result<()> {
        // zero optical depth is allowed: it switches absorption off
        if !(self.peak_od.is_finite() && self.peak_od >= 0.0) {
            return Err(Error::Calibration(format!(
                "peak_od must be nonnegative, got {}",
                self.peak_od
            )));
        }
        for (name, v) in [
            ("coupling_c", self.coupling_c),
            ("p_sat_phase", self.p_sat_phase),
            ("p_sat_abs", self.p_sat_abs),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Calibration(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn saturation(&self) -> SaturationPowers {
        SaturationPowers {
            phase: self.p_sat_phase,
            absorption: self.p_sat_abs,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cal: KerrCalibration = serde_json::from_str(text)?;
        cal.validate()?;
        Ok(cal)
    }

    /// Short content hash identifying this calibration in run manifests.
    pub fn id(&self) -> String {
        let canonical = serde_json::to_string(self).expect("calibration serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Phase observed at the dispersion extremum for the given powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAnchor {
    pub phase: f64,
    pub p_sig: f64,
    pub p_met: f64,
}

/// Fractional absorption observed at the absorption maximum, at meter power `p_met`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionAnchor {
    pub absorption: f64,
    pub p_met: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationAnchors {
    pub phase: PhaseAnchor,
    pub absorption: AbsorptionAnchor,
    pub saturation: SaturationPowers,
}

impl Default for CalibrationAnchors {
    /// π rad at 25 µW signal and 1 µW meter; 70 % peak absorption in the
    /// weak-meter limit.
    fn default() -> Self {
        Self {
            phase: PhaseAnchor {
                phase: std::f64::consts::PI,
                p_sig: 25e-6,
                p_met: 1e-6,
            },
            absorption: AbsorptionAnchor {
                absorption: 0.70,
                p_met: 0.0,
            },
            saturation: SaturationPowers::MAX_PHASE,
        }
    }
}

/// Solves for the coupling constant and peak optical depth that reproduce
/// the anchors exactly.
pub fn calibrate(anchors: &CalibrationAnchors, consts: &AtomicConstants, cell: &FiberCell) -> Result<KerrCalibration> {
    let infeasible = |what: &str, v: f64| Error::Calibration(format!("{what} must be positive, got {v}"));
    let PhaseAnchor { phase, p_sig, p_met } = anchors.phase;
    if !(phase.is_finite() && phase > 0.0) {
        return Err(infeasible("phase anchor", phase));
    }
    if !(p_sig.is_finite() && p_sig > 0.0) {
        return Err(infeasible("phase anchor signal power", p_sig));
    }
    if !(p_met.is_finite() && p_met >= 0.0) {
        return Err(Error::Calibration(format!(
            "phase anchor meter power must be nonnegative, got {p_met}"
        )));
    }
    let a = anchors.absorption.absorption;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Calibration(format!(
            "absorption anchor must lie in (0, 1), got {a}"
        )));
    }
    let sat = anchors.saturation;
    if !(sat.phase > 0.0 && sat.absorption > 0.0) {
        return Err(infeasible("saturation power", sat.phase.min(sat.absorption)));
    }

    let s_phase = saturation_factor(p_met, sat.phase).map_err(|e| Error::Calibration(e.to_string()))?;
    let s_abs =
        saturation_factor(anchors.absorption.p_met, sat.absorption).map_err(|e| Error::Calibration(e.to_string()))?;

    let per_coupling = (2.0 / 3.0) * cell.length() * consts.k_met() * (p_sig / cell.mode_area()) * s_phase;
    let cal = KerrCalibration {
        coupling_c: phase / per_coupling,
        peak_od: -(1.0 - a).ln() / s_abs,
        p_sat_phase: sat.phase,
        p_sat_abs: sat.absorption,
    };
    cal.validate()?;
    Ok(cal)
}
