use std::f64::consts::TAU;

use crate::error::{ensure_positive, Result};

/// Reduced Planck constant, J·s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Natural linewidth of Rb 5P3/2 divided by 2π, in Hz.
///
/// Steck, "Rubidium 85 D Line Data" (rev. 2.2.3), Γ = 2π·6.0666 MHz.
pub const RB_5P32_LINEWIDTH_HZ: f64 = 6.07e6;

/// Laser wavelengths, decay rates and detunings of the ladder
/// ground → intermediate → excited.
///
/// Rates and detunings are angular (rad/s). The derived meter wavevector and
/// signal angular frequency are computed from the stored wavelengths on
/// every call, so they can never drift out of sync.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicConstants {
    pub lambda_met: f64,
    pub lambda_sig: f64,
    /// Intermediate-state decay rate Γ_i.
    pub gamma_i: f64,
    /// Two-photon linewidth Γ_e.
    pub gamma_e: f64,
    /// Intermediate-state detuning Δ_i = ω_gi − ω_met.
    pub delta_i: f64,
    pub hbar: f64,
    pub c: f64,
}

impl Default for AtomicConstants {
    fn default() -> Self {
        Self {
            lambda_met: 780e-9,
            lambda_sig: 776e-9,
            gamma_i: TAU * RB_5P32_LINEWIDTH_HZ,
            gamma_e: TAU * 10e6,
            delta_i: TAU * 1.2e9,
            hbar: HBAR,
            c: SPEED_OF_LIGHT,
        }
    }
}

impl AtomicConstants {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("lambda_met", self.lambda_met)?;
        ensure_positive("lambda_sig", self.lambda_sig)?;
        ensure_positive("gamma_i", self.gamma_i)?;
        ensure_positive("gamma_e", self.gamma_e)?;
        ensure_positive("delta_i", self.delta_i)?;
        ensure_positive("hbar", self.hbar)?;
        ensure_positive("c", self.c)?;
        Ok(())
    }

    /// Meter wavevector 2π/λ_met, rad/m.
    pub fn k_met(&self) -> f64 {
        TAU / self.lambda_met
    }

    /// Signal angular frequency 2πc/λ_sig, rad/s.
    pub fn omega_sig(&self) -> f64 {
        TAU * self.c / self.lambda_sig
    }

    /// Meter angular frequency 2πc/λ_met, rad/s.
    pub fn omega_met(&self) -> f64 {
        TAU * self.c / self.lambda_met
    }

    /// Energy of one meter photon, J.
    pub fn meter_photon_energy(&self) -> f64 {
        self.hbar * self.omega_met()
    }

    /// Energy of one signal photon, J.
    pub fn signal_photon_energy(&self) -> f64 {
        self.hbar * self.omega_sig()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities_track_wavelengths() {
        let mut c = AtomicConstants::default();
        let k = c.k_met();
        assert!((k * c.lambda_met / TAU - 1.0).abs() < 1e-12);
        assert!((c.omega_sig() * c.lambda_sig / (TAU * c.c) - 1.0).abs() < 1e-12);
        c.lambda_met = 795e-9;
        assert!((c.k_met() * 795e-9 / TAU - 1.0).abs() < 1e-12);
        assert!(c.k_met() < k);
    }

    #[test]
    fn rejects_nonpositive_fields() {
        let c = AtomicConstants {
            gamma_i: 0.0,
            ..AtomicConstants::default()
        };
        assert!(c.validate().is_err());
        let c = AtomicConstants {
            lambda_sig: -1.0,
            ..AtomicConstants::default()
        };
        assert!(c.validate().is_err());
        AtomicConstants::default().validate().unwrap();
    }
}
