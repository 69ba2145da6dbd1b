use num_complex::Complex64;
use rayon::prelude::*;

use super::lineshape::{complex_voigt, LineshapeParams};
use super::manifold::HyperfineManifold;
use crate::error::{ensure_finite, Error, Result};

/// Strength-weighted sum of complex Voigt profiles, one per hyperfine line,
/// each centred on its offset.
pub fn manifold_susceptibility(
    delta_e: f64,
    manifold: &HyperfineManifold,
    params: &LineshapeParams,
) -> Result<Complex64> {
    ensure_finite("delta_e", delta_e)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for c in manifold.components() {
        acc += c.strength * complex_voigt(delta_e - c.offset, params)?;
    }
    Ok(acc)
}

/// Susceptibility sampled on a strictly increasing detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    detunings: Vec<f64>,
    values: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(detunings: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        check_grid(&detunings)?;
        if values.len() != detunings.len() {
            return Err(Error::domain(format!(
                "spectrum has {} detunings but {} values",
                detunings.len(),
                values.len()
            )));
        }
        Ok(Self { detunings, values })
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dispersion(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn absorption(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }
}

/// Requires at least two finite, strictly increasing points.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::domain(format!(
            "grid needs at least 2 points, got {}",
            grid.len()
        )));
    }
    for x in grid {
        ensure_finite("grid point", *x)?;
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::domain(format!(
            "grid not strictly increasing at index {}: {} then {}",
            i + 1,
            grid[i],
            grid[i + 1]
        )));
    }
    Ok(())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// Pointwise [`manifold_susceptibility`] over `grid`.
pub fn spectrum_grid(manifold: &HyperfineManifold, params: &LineshapeParams, grid: &[f64]) -> Result<ComplexSpectrum> {
    check_grid(grid)?;
    let values = grid
        .par_iter()
        .map(|&d| manifold_susceptibility(d, manifold, params))
        .collect::<Result<Vec<_>>>()?;
    ComplexSpectrum::new(grid.to_vec(), values)
}

/// A manifold and lineshape together with the locations of the dispersion
/// extremum and absorption maximum, so observables can be expressed relative
/// to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldShape {
    manifold: HyperfineManifold,
    params: LineshapeParams,
    dispersion_extremum: Extremum,
    absorption_peak: Extremum,
}

/// Location (rad/s) and signed value of a lineshape extremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub detuning: f64,
    pub value: f64,
}

impl ManifoldShape {
    pub fn new(manifold: HyperfineManifold, params: LineshapeParams) -> Result<Self> {
        let dispersion_extremum = locate(&manifold, &params, |v| v.re)?;
        let absorption_peak = locate(&manifold, &params, |v| v.im)?;
        Ok(Self {
            manifold,
            params,
            dispersion_extremum,
            absorption_peak,
        })
    }

    pub fn manifold(&self) -> &HyperfineManifold {
        &self.manifold
    }

    pub fn params(&self) -> &LineshapeParams {
        &self.params
    }

    /// Global extremum of the dispersion (largest |Re χ|, ties go to the
    /// positive lobe).
    pub fn dispersion_extremum(&self) -> Extremum {
        self.dispersion_extremum
    }

    pub fn absorption_peak(&self) -> Extremum {
        self.absorption_peak
    }

    pub fn susceptibility(&self, delta_e: f64) -> Result<Complex64> {
        manifold_susceptibility(delta_e, &self.manifold, &self.params)
    }

    /// Dispersion scaled so it equals exactly 1 at the extremum.
    pub fn normalized_dispersion(&self, delta_e: f64) -> Result<f64> {
        if delta_e == self.dispersion_extremum.detuning {
            return Ok(1.0);
        }
        Ok(self.susceptibility(delta_e)?.re / self.dispersion_extremum.value)
    }

    /// Absorption scaled so it equals exactly 1 at its maximum.
    pub fn normalized_absorption(&self, delta_e: f64) -> Result<f64> {
        if delta_e == self.absorption_peak.detuning {
            return Ok(1.0);
        }
        Ok(self.susceptibility(delta_e)?.im / self.absorption_peak.value)
    }

    /// Rough half width of one line, rad/s.
    pub fn line_halfwidth(&self) -> f64 {
        self.params.gamma_l() + 1.1774 * self.params.sigma_g()
    }
}

const SCAN_PAD_HALFWIDTHS: f64 = 10.0;
const SCAN_STEPS_PER_HALFWIDTH: f64 = 40.0;
const POSITIVE_TIE_BIAS: f64 = 1e-9;

fn locate(manifold: &HyperfineManifold, params: &LineshapeParams, part: impl Fn(Complex64) -> f64) -> Result<Extremum> {
    let w = params.gamma_l() + 1.1774 * params.sigma_g();
    let lo = manifold.min_offset() - SCAN_PAD_HALFWIDTHS * w;
    let hi = manifold.max_offset() + SCAN_PAD_HALFWIDTHS * w;
    let n = (((hi - lo) / w) * SCAN_STEPS_PER_HALFWIDTH).ceil() as usize + 1;
    let step = (hi - lo) / (n - 1) as f64;

    let score = |x: f64| -> Result<f64> {
        let v = part(manifold_susceptibility(x, manifold, params)?);
        Ok(if v > 0.0 { v * (1.0 + POSITIVE_TIE_BIAS) } else { -v })
    };

    let mut best_x = lo;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let x = lo + step * i as f64;
        let s = score(x)?;
        if s > best {
            best = s;
            best_x = x;
        }
    }

    // golden-section refinement inside the bracketing cells
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_x - step, best_x + step);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (score(c)?, score(d)?);
    while (b - a) > 1e-13 * (w + best_x.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = score(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = score(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let value = part(manifold_susceptibility(x, manifold, params)?);
    Ok(Extremum { detuning: x, value })
}
