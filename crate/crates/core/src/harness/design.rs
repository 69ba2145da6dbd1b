use crate::error::{Error, Result};

/// Improvement factors for a next-generation fibre and detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignParams {
    pub core_factor: f64,
    pub density_factor: f64,
    pub length_factor: f64,
    /// Quantum efficiency of the improved detector.
    pub qe_new: f64,
    /// Measured phase per signal photon, rad.
    pub baseline_phi_ph: f64,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self {
            core_factor: 80.0,
            density_factor: 200.0,
            length_factor: 10.0,
            qe_new: 0.8,
            baseline_phi_ph: 1.3e-6,
        }
    }
}

impl DesignParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("core_factor", self.core_factor),
            ("density_factor", self.density_factor),
            ("length_factor", self.length_factor),
            ("baseline_phi_ph", self.baseline_phi_ph),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.qe_new > 0.0 && self.qe_new <= 1.0) {
            return Err(Error::domain(format!("qe_new must lie in (0, 1], got {}", self.qe_new)));
        }
        Ok(())
    }
}

/// Phase per signal photon after all improvements, rad.
pub fn extrapolate_design(params: &DesignParams) -> Result<f64> {
    params.validate()?;
    Ok(params.baseline_phi_ph * params.core_factor * params.density_factor * params.length_factor)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignReport {
    pub phi_per_photon: f64,
    /// Factor by which the shot-noise floor falls with the new detector.
    pub noise_floor_factor: f64,
}

impl DesignReport {
    /// `qe_old` is the quantum efficiency of the current detector.
    pub fn new(params: &DesignParams, qe_old: f64) -> Result<Self> {
        if !(qe_old > 0.0 && qe_old <= 1.0) {
            return Err(Error::domain(format!("qe_old must lie in (0, 1], got {qe_old}")));
        }
        Ok(Self {
            phi_per_photon: extrapolate_design(params)?,
            noise_floor_factor: (qe_old / params.qe_new).sqrt(),
        })
    }
}
