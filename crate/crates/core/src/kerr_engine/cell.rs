use std::f64::consts::PI;

use crate::atomic_model::BOLTZMANN;
use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};

/// Vapour-filled section of the fibre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberCell {
    length: f64,
    core_diameter: f64,
    mode_area: f64,
    density: f64,
}

/// Default atom density, m⁻³. Chosen so that ρ·L·A ≈ 1.24e9 atoms for the
/// default 20 cm, 45 µm cell.
pub const DEFAULT_DENSITY: f64 = 3.9e18;

impl Default for FiberCell {
    fn default() -> Self {
        Self::new(0.20, 45e-6, DEFAULT_DENSITY).expect("default cell is valid")
    }
}

impl FiberCell {
    /// Cell with the geometric mode area π(d/2)².
    pub fn new(length: f64, core_diameter: f64, density: f64) -> Result<Self> {
        ensure_positive("core_diameter", core_diameter)?;
        Self::with_mode_area(length, core_diameter, geometric_area(core_diameter), density)
    }

    /// Cell with an explicit mode area, for effective-area conventions.
    pub fn with_mode_area(length: f64, core_diameter: f64, mode_area: f64, density: f64) -> Result<Self> {
        ensure_positive("length", length)?;
        ensure_positive("core_diameter", core_diameter)?;
        ensure_positive("mode_area", mode_area)?;
        ensure_positive("density", density)?;
        Ok(Self {
            length,
            core_diameter,
            mode_area,
            density,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn core_diameter(&self) -> f64 {
        self.core_diameter
    }

    pub fn mode_area(&self) -> f64 {
        self.mode_area
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    /// Number of atoms in the interaction volume, ρ·L·A.
    pub fn atom_number(&self) -> f64 {
        self.density * self.length * self.mode_area
    }

    pub fn with_density(self, density: f64) -> Result<Self> {
        Self::with_mode_area(self.length, self.core_diameter, self.mode_area, density)
    }
}

pub fn geometric_area(core_diameter: f64) -> f64 {
    PI * (core_diameter / 2.0).powi(2)
}

/// Saturated rubidium vapour number density, m⁻³, at `temperature` kelvin.
///
/// Uses the two-branch vapour-pressure fit of Alcock, Itkin and Horrigan,
/// Can. Metall. Q. 23, 309 (1984), in the torr form tabulated by Steck:
/// log₁₀ P = 7.738 − 4215/T (solid), 7.193 − 4040/T (liquid, above 312.46 K).
pub fn rb_vapor_density(temperature: f64) -> Result<f64> {
    ensure_positive("temperature", temperature)?;
    const MELTING_POINT: f64 = 312.46;
    const TORR: f64 = 133.322_368;
    let log_p = if temperature < MELTING_POINT {
        2.881 + 4.857 - 4215.0 / temperature
    } else {
        2.881 + 4.312 - 4040.0 / temperature
    };
    Ok(10f64.powf(log_p) * TORR / (BOLTZMANN * temperature))
}

/// Meter and signal optical powers, W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamPowers {
    pub p_met: f64,
    pub p_sig: f64,
}

impl BeamPowers {
    pub fn new(p_met: f64, p_sig: f64) -> Result<Self> {
        let p = Self { p_met, p_sig };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_nonnegative("p_met", self.p_met)
            .and_then(|_| ensure_nonnegative("p_sig", self.p_sig))
            .map_err(|e| Error::domain(format!("beam powers: {e}")))
    }
}
