use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;

use super::faddeeva::faddeeva;
use crate::error::{ensure_finite, ensure_nonnegative, ensure_positive, Error, Result};

/// Lorentzian half width at half maximum, rad/s, used by the default lineshape.
pub const DEFAULT_GAMMA_L: f64 = TAU * 3.0e6;
/// Gaussian standard deviation, rad/s. Together with [`DEFAULT_GAMMA_L`] it
/// gives a 10 MHz full width at half maximum (see `from_total_fwhm`).
pub const DEFAULT_SIGMA_G: f64 = TAU * 2.629_483_302_080_365_6e6;

/// Voigt widths: Lorentzian HWHM and Gaussian standard deviation, both angular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineshapeParams {
    gamma_l: f64,
    sigma_g: f64,
}

impl Default for LineshapeParams {
    fn default() -> Self {
        Self {
            gamma_l: DEFAULT_GAMMA_L,
            sigma_g: DEFAULT_SIGMA_G,
        }
    }
}

impl LineshapeParams {
    pub fn new(gamma_l: f64, sigma_g: f64) -> Result<Self> {
        ensure_positive("gamma_L", gamma_l)?;
        ensure_nonnegative("sigma_G", sigma_g)?;
        Ok(Self { gamma_l, sigma_g })
    }

    /// Picks the Gaussian width so that the profile's full width at half
    /// maximum equals `fwhm` for the given Lorentzian HWHM.
    pub fn from_total_fwhm(fwhm: f64, gamma_l: f64) -> Result<Self> {
        ensure_positive("fwhm", fwhm)?;
        ensure_positive("gamma_L", gamma_l)?;
        if fwhm <= 2.0 * gamma_l {
            return Err(Error::domain(format!(
                "total FWHM {fwhm} must exceed the Lorentzian FWHM {}",
                2.0 * gamma_l
            )));
        }
        let width_of = |sigma: f64| -> Result<f64> {
            LineshapeParams {
                gamma_l,
                sigma_g: sigma,
            }
            .fwhm()
        };
        // FWHM is monotone in sigma; 0 gives 2γ, fwhm/2 gives more than fwhm.
        let (mut lo, mut hi) = (0.0, fwhm / 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if width_of(mid)? < fwhm {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Self::new(gamma_l, 0.5 * (lo + hi))
    }

    pub fn gamma_l(&self) -> f64 {
        self.gamma_l
    }

    pub fn sigma_g(&self) -> f64 {
        self.sigma_g
    }

    /// Full width at half maximum of the absorption (imaginary) part, found
    /// by bisection on the half-maximum crossing.
    pub fn fwhm(&self) -> Result<f64> {
        let peak = complex_voigt(0.0, self)?.im;
        let mut hi = self.gamma_l + 3.0 * self.sigma_g;
        while complex_voigt(hi, self)?.im > 0.5 * peak {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if complex_voigt(mid, self)?.im > 0.5 * peak {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(lo + hi)
    }
}

/// Complex Voigt profile.
///
/// The imaginary part is the absorption profile and the real part the
/// matching dispersion. Normalised so the pure Lorentzian reads
/// `γ/(Δ − iγ)`: imaginary part 1 on resonance, and the integrated
/// absorption is πγ for every Gaussian width.
pub fn complex_voigt(delta: f64, params: &LineshapeParams) -> Result<Complex64> {
    ensure_finite("delta", delta)?;
    let gamma = params.gamma_l;
    let sigma = params.sigma_g;
    if sigma == 0.0 {
        return Ok(gamma / Complex64::new(delta, -gamma));
    }
    let z = Complex64::new(delta, gamma) / (SQRT_2 * sigma);
    let w = faddeeva(z);
    // i·conj(w) swaps the absorptive (Re w) and dispersive (Im w) parts.
    let scale = gamma * (PI / 2.0).sqrt() / sigma;
    Ok(Complex64::new(w.im, w.re) * scale)
}
