//! Cross-Kerr observables: meter phase shift, transmission, per-photon and
//! per-atom phase, n₂, and the phase-to-absorption ratio.

mod calibration;
mod cell;

pub use calibration::{
    calibrate, AbsorptionAnchor, CalibrationAnchors, KerrCalibration, PhaseAnchor, SaturationPowers,
};
pub use cell::{geometric_area, rb_vapor_density, BeamPowers, FiberCell, DEFAULT_DENSITY};

use rayon::prelude::*;

use crate::atomic_model::{check_grid, AtomicConstants, HyperfineManifold, LineshapeParams, ManifoldShape};
use crate::error::{ensure_finite, ensure_nonnegative, ensure_positive, Error, Result};

/// Default floor on −ln T below which the phase/absorption ratio is reported missing.
pub const DEFAULT_RATIO_FLOOR: f64 = 1e-6;

/// Two-level saturation law `1/(1 + P/P_sat)`.
pub fn saturation_factor(p_met: f64, p_sat: f64) -> Result<f64> {
    ensure_nonnegative("p_met", p_met)?;
    ensure_positive("p_sat", p_sat)?;
    Ok(1.0 / (1.0 + p_met / p_sat))
}

/// Phase shift per signal photon, φ_met·ħω_sig·Γ_i / P_sig.
pub fn phase_per_photon(phi_met: f64, p_sig: f64, consts: &AtomicConstants) -> Result<f64> {
    ensure_finite("phi_met", phi_met)?;
    ensure_positive("p_sig", p_sig)?;
    Ok(phi_met * consts.hbar * consts.omega_sig() * consts.gamma_i / p_sig)
}

/// Phase shift per atom in the interaction volume, φ_met / (ρ·L·A).
pub fn phase_per_atom(phi_met: f64, cell: &FiberCell) -> Result<f64> {
    ensure_finite("phi_met", phi_met)?;
    Ok(phi_met / cell.atom_number())
}

/// Kerr coefficient n₂ (m²/W) implied by a meter phase shift:
/// n₂ = 3·φ·A / (2·L·k_met·P_sig).
pub fn n2_from_phase(phi_met: f64, cell: &FiberCell, p_sig: f64, consts: &AtomicConstants) -> Result<f64> {
    ensure_finite("phi_met", phi_met)?;
    ensure_positive("p_sig", p_sig)?;
    Ok(3.0 * phi_met * cell.mode_area() / (2.0 * cell.length() * consts.k_met() * p_sig))
}

/// Phase, transmission and their ratio across a detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAbsorptionSpectrum {
    pub detunings: Vec<f64>,
    pub phase: Vec<f64>,
    pub transmission: Vec<f64>,
    /// φ / (−ln T); `None` where the absorption is below the floor.
    pub ratio: Vec<Option<f64>>,
}

impl PhaseAbsorptionSpectrum {
    /// Builds the spectrum and its ratio column.
    pub fn new(detunings: Vec<f64>, phase: Vec<f64>, transmission: Vec<f64>, ratio_floor: f64) -> Result<Self> {
        if phase.len() != detunings.len() || transmission.len() != detunings.len() {
            return Err(Error::domain("spectrum columns differ in length"));
        }
        if let Some(t) = transmission.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::domain(format!("transmission {t} outside (0, 1]")));
        }
        let mut s = Self {
            detunings,
            phase,
            transmission,
            ratio: Vec::new(),
        };
        s.ratio = ratio_spectrum(&s, ratio_floor);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }
}

/// Pointwise φ / (−ln T), missing where −ln T < `floor`.
pub fn ratio_spectrum(spectrum: &PhaseAbsorptionSpectrum, floor: f64) -> Vec<Option<f64>> {
    spectrum
        .phase
        .iter()
        .zip(&spectrum.transmission)
        .map(|(phi, t)| {
            let od = -t.ln();
            (od >= floor).then(|| phi / od)
        })
        .collect()
}

/// Calibrated forward model for the vapour cell.
#[derive(Debug, Clone)]
pub struct KerrEngine {
    consts: AtomicConstants,
    cell: FiberCell,
    shape: ManifoldShape,
    cal: KerrCalibration,
}

impl KerrEngine {
    pub fn new(consts: AtomicConstants, cell: FiberCell, shape: ManifoldShape, cal: KerrCalibration) -> Result<Self> {
        consts.validate()?;
        cal.validate()?;
        Ok(Self {
            consts,
            cell,
            shape,
            cal,
        })
    }

    /// Calibrates against `anchors` and builds the engine.
    pub fn calibrated(
        consts: AtomicConstants,
        cell: FiberCell,
        shape: ManifoldShape,
        anchors: &CalibrationAnchors,
    ) -> Result<Self> {
        let cal = calibrate(anchors, &consts, &cell)?;
        Self::new(consts, cell, shape, cal)
    }

    /// Default constants, cell, 85Rb manifold, lineshape and anchors.
    pub fn with_defaults() -> Result<Self> {
        let shape = ManifoldShape::new(HyperfineManifold::default(), LineshapeParams::default())?;
        Self::calibrated(
            AtomicConstants::default(),
            FiberCell::default(),
            shape,
            &CalibrationAnchors::default(),
        )
    }

    pub fn consts(&self) -> &AtomicConstants {
        &self.consts
    }

    pub fn cell(&self) -> &FiberCell {
        &self.cell
    }

    pub fn shape(&self) -> &ManifoldShape {
        &self.shape
    }

    pub fn calibration(&self) -> &KerrCalibration {
        &self.cal
    }

    /// Detuning of the largest phase shift, rad/s.
    pub fn max_phase_detuning(&self) -> f64 {
        self.shape.dispersion_extremum().detuning
    }

    /// Meter phase shift with the calibration's saturation powers.
    pub fn meter_phase_shift(&self, powers: BeamPowers, delta_e: f64) -> Result<f64> {
        self.meter_phase_shift_with(powers, delta_e, self.cal.saturation())
    }

    /// φ = ⅔·C·L·k_met·(P_sig/A)·Re χ̂(Δ_e)·S(P_met), with Re χ̂ the dispersion
    /// normalised to 1 at its extremum.
    pub fn meter_phase_shift_with(&self, powers: BeamPowers, delta_e: f64, sat: SaturationPowers) -> Result<f64> {
        powers.validate()?;
        let s = saturation_factor(powers.p_met, sat.phase)?;
        let chi = self.shape.normalized_dispersion(delta_e)?;
        Ok(self.unsaturated_phase_per_watt() * powers.p_sig * chi * s)
    }

    /// ⅔·C·L·k_met/A: phase per watt of signal at the extremum, no saturation.
    fn unsaturated_phase_per_watt(&self) -> f64 {
        (2.0 / 3.0) * self.cal.coupling_c * self.cell.length() * self.consts.k_met() / self.cell.mode_area()
    }

    pub fn transmission(&self, powers: BeamPowers, delta_e: f64) -> Result<f64> {
        self.transmission_with(powers, delta_e, self.cal.saturation())
    }

    /// T = exp(−OD_peak·Im χ̂(Δ_e)·S(P_met)), Im χ̂ normalised to 1 at the
    /// absorption maximum. Independent of the signal power.
    pub fn transmission_with(&self, powers: BeamPowers, delta_e: f64, sat: SaturationPowers) -> Result<f64> {
        powers.validate()?;
        let s = saturation_factor(powers.p_met, sat.absorption)?;
        let chi = self.shape.normalized_absorption(delta_e)?;
        Ok((-self.cal.peak_od * chi * s).exp())
    }

    /// Analytic phase/transmission spectrum over `grid`.
    pub fn spectrum(&self, grid: &[f64], powers: BeamPowers, ratio_floor: f64) -> Result<PhaseAbsorptionSpectrum> {
        check_grid(grid)?;
        let rows = grid
            .par_iter()
            .map(|&d| Ok((self.meter_phase_shift(powers, d)?, self.transmission(powers, d)?)))
            .collect::<Result<Vec<_>>>()?;
        let (phase, transmission) = rows.into_iter().unzip();
        PhaseAbsorptionSpectrum::new(grid.to_vec(), phase, transmission, ratio_floor)
    }

    /// Effective n₂ at the dispersion extremum implied by this calibration.
    pub fn n2(&self) -> f64 {
        self.cal.coupling_c
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{PI, TAU};

    use super::*;
    use crate::atomic_model::linear_grid;

    fn engine() -> KerrEngine {
        let shape = ManifoldShape::new(HyperfineManifold::default(), LineshapeParams::default()).unwrap();
        KerrEngine::calibrated(
            AtomicConstants::default(),
            FiberCell::default(),
            shape,
            &CalibrationAnchors::default(),
        )
        .unwrap()
    }

    #[test]
    fn saturation_factor_examples() {
        assert_eq!(saturation_factor(0.0, 3e-6).unwrap(), 1.0);
        assert_eq!(saturation_factor(3e-6, 3e-6).unwrap(), 0.5);
        assert!(saturation_factor(-1.0, 3e-6).is_err());
        assert!(saturation_factor(1.0, 0.0).is_err());
        let mut last = 1.0;
        for k in 1..50 {
            let s = saturation_factor(k as f64 * 1e-6, 3e-6).unwrap();
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn zero_signal_gives_zero_phase() {
        let e = engine();
        let p = BeamPowers::new(1e-6, 0.0).unwrap();
        assert_eq!(e.meter_phase_shift(p, e.max_phase_detuning()).unwrap(), 0.0);
    }

    #[test]
    fn anchor_reproduces_pi() {
        let e = engine();
        let p = BeamPowers::new(1e-6, 25e-6).unwrap();
        let phi = e.meter_phase_shift(p, e.max_phase_detuning()).unwrap();
        assert!((phi / PI - 1.0).abs() < 1e-12, "{phi}");
    }

    #[test]
    fn weak_meter_limit_is_four_thirds_pi() {
        // S(1 µW, 3 µW) = 3/4, so the unsaturated value is 4π/3
        let e = engine();
        let phi0 = e
            .meter_phase_shift(BeamPowers::new(0.0, 25e-6).unwrap(), e.max_phase_detuning())
            .unwrap();
        assert!((phi0 / (4.0 * PI / 3.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_od_zero_gives_unit_transmission() {
        let e = engine();
        let mut cal = *e.calibration();
        cal.peak_od = 0.0;
        let e = KerrEngine::new(*e.consts(), *e.cell(), e.shape().clone(), cal).unwrap();
        for d in linear_grid(-TAU * 80e6, TAU * 80e6, 101) {
            assert_eq!(e.transmission(BeamPowers::new(0.0, 25e-6).unwrap(), d).unwrap(), 1.0);
        }
    }

    #[test]
    fn wing_absorption_suppressed_twentyfold() {
        let e = engine();
        let p = BeamPowers::new(0.0, 25e-6).unwrap();
        let peak = 1.0 - e.transmission(p, e.shape().absorption_peak().detuning).unwrap();
        let wing = 1.0 - e.transmission(p, -TAU * 35e6).unwrap();
        assert!((peak - 0.7).abs() < 1e-12);
        assert!(peak / wing >= 20.0, "suppression {}", peak / wing);
    }

    #[test]
    fn exact_linearity_in_signal() {
        let e = engine();
        let d = e.max_phase_detuning() - TAU * 4e6;
        let base = e.meter_phase_shift(BeamPowers::new(2e-6, 1e-6).unwrap(), d).unwrap();
        for alpha in [0.5, 2.0, 10.0, 37.5] {
            let phi = e
                .meter_phase_shift(BeamPowers::new(2e-6, alpha * 1e-6).unwrap(), d)
                .unwrap();
            assert!((phi - alpha * base).abs() <= 4.0 * f64::EPSILON * phi.abs());
        }
    }

    #[test]
    fn monotone_in_meter_power() {
        let e = engine();
        let d = e.max_phase_detuning();
        let mut last_phi = f64::INFINITY;
        let mut last_t = 0.0;
        for k in 0..40 {
            let p = BeamPowers::new(k as f64 * 2.5e-6, 25e-6).unwrap();
            let phi = e.meter_phase_shift(p, d).unwrap();
            let t = e.transmission(p, d).unwrap();
            assert!(phi < last_phi);
            assert!(t > last_t);
            last_phi = phi;
            last_t = t;
        }
    }

    #[test]
    fn phase_changes_sign_absorption_does_not() {
        let e = engine();
        let s = e
            .spectrum(
                &linear_grid(-TAU * 80e6, TAU * 80e6, 801),
                BeamPowers::new(1e-6, 45e-6).unwrap(),
                DEFAULT_RATIO_FLOOR,
            )
            .unwrap();
        assert!(s.phase.iter().any(|p| *p > 0.1) && s.phase.iter().any(|p| *p < -0.1));
        assert!(s.transmission.iter().all(|t| *t < 1.0 && *t > 0.0));
    }

    #[test]
    fn ratio_of_lorentzian_grows_linearly() {
        let g = TAU * 3e6;
        let p = LineshapeParams::new(g, 0.0).unwrap();
        let grid = linear_grid(-10.0 * g, 10.0 * g, 201);
        let chi: Vec<_> = grid
            .iter()
            .map(|d| crate::atomic_model::complex_voigt(*d, &p).unwrap())
            .collect();
        let s = PhaseAbsorptionSpectrum::new(
            grid.clone(),
            chi.iter().map(|c| c.re).collect(),
            chi.iter().map(|c| (-c.im).exp()).collect(),
            DEFAULT_RATIO_FLOOR,
        )
        .unwrap();
        for (d, r) in grid.iter().zip(&s.ratio) {
            assert!((r.unwrap() - d / g).abs() < 1e-12 * (1.0 + (d / g).abs()));
        }
    }

    #[test]
    fn ratio_unit_and_floor() {
        let s = PhaseAbsorptionSpectrum::new(
            vec![0.0, 1.0, 2.0],
            vec![1.0, 1.0, 0.0],
            vec![(-1.0f64).exp(), 1.0, 1.0 - 1e-9],
            DEFAULT_RATIO_FLOOR,
        )
        .unwrap();
        assert!((s.ratio[0].unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.ratio[1], None);
        assert_eq!(s.ratio[2], None);
        assert!(PhaseAbsorptionSpectrum::new(vec![0.0], vec![0.0], vec![0.0], 1e-6).is_err());
    }

    #[test]
    fn per_photon_and_per_atom_scaling() {
        let c = AtomicConstants::default();
        assert_eq!(phase_per_photon(0.0, 25e-6, &c).unwrap(), 0.0);
        let a = phase_per_photon(3.6, 25e-6, &c).unwrap();
        let b = phase_per_photon(3.6, 12.5e-6, &c).unwrap();
        assert!((b / a - 2.0).abs() < 1e-15);
        assert!(phase_per_photon(3.6, 0.0, &c).is_err());

        let cell = FiberCell::default();
        assert_eq!(phase_per_atom(0.0, &cell).unwrap(), 0.0);
        let dense = cell.with_density(2.0 * cell.density()).unwrap();
        let r = phase_per_atom(3.6, &dense).unwrap() / phase_per_atom(3.6, &cell).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn n2_round_trips_through_phase() {
        let e = engine();
        let n2 = 1e-10;
        let cal = KerrCalibration {
            coupling_c: n2,
            ..*e.calibration()
        };
        let e = KerrEngine::new(*e.consts(), *e.cell(), e.shape().clone(), cal).unwrap();
        let p_sig = 25e-6;
        let phi = e
            .meter_phase_shift(BeamPowers::new(0.0, p_sig).unwrap(), e.max_phase_detuning())
            .unwrap();
        let back = n2_from_phase(phi, e.cell(), p_sig, e.consts()).unwrap();
        assert!((back / n2 - 1.0).abs() < 1e-12);
        assert_eq!(n2_from_phase(0.0, e.cell(), p_sig, e.consts()).unwrap(), 0.0);
        assert!(n2_from_phase(1.0, e.cell(), 0.0, e.consts()).is_err());
    }
}
