//! Discrete Hilbert transform for Kramers-Kronig consistency checks.

use super::spectrum::check_grid;
use crate::error::{Error, Result};

/// Hilbert transform `(1/π) PV ∫ f(t)/(x − t) dt` of samples on a uniform
/// grid, by Maclaurin's odd-point rule.
///
/// Applied to the absorption of a causal susceptibility in the convention
/// used here it returns the dispersion. Values beyond the grid are taken as
/// zero, so accuracy degrades towards the edges.
pub fn hilbert_transform(grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    check_grid(grid)?;
    if grid.len() != values.len() {
        return Err(Error::domain("grid and values differ in length"));
    }
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let uniform = grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if !uniform {
        return Err(Error::domain("hilbert transform needs a uniform grid"));
    }
    let out = (0..n)
        .map(|i| {
            let first = if i % 2 == 0 { 1 } else { 0 };
            let sum: f64 = (first..n).step_by(2).map(|j| values[j] / (i as f64 - j as f64)).sum();
            2.0 / std::f64::consts::PI * sum
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic_model::linear_grid;

    #[test]
    fn lorentzian_pair() {
        // H[1/(1+t²)] = x/(1+x²)
        let grid = linear_grid(-400.0, 400.0, 8001);
        let f: Vec<f64> = grid.iter().map(|t| 1.0 / (1.0 + t * t)).collect();
        let h = hilbert_transform(&grid, &f).unwrap();
        for (i, x) in grid.iter().enumerate().filter(|(_, x)| x.abs() < 20.0) {
            let exact = x / (1.0 + x * x);
            assert!((h[i] - exact).abs() < 2e-3, "x={x}: {} vs {exact}", h[i]);
        }
    }

    #[test]
    fn rejects_nonuniform_grid() {
        assert!(hilbert_transform(&[0.0, 1.0, 3.0], &[0.0; 3]).is_err());
        assert!(hilbert_transform(&[0.0, 1.0], &[0.0; 3]).is_err());
    }
}
