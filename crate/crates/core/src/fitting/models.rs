use serde::{Deserialize, Serialize};

use super::Bound;
use crate::atomic_model::ManifoldShape;
use crate::error::{Error, Result};

/// Shipped fit models.
///
/// - `DispersionManifold`: y = scale·Re χ̂(x − center) + offset, with χ̂ the
///   manifold dispersion normalised to 1 at its extremum; params
///   (scale, center, offset).
/// - `PowerLaw`: y = a·x^b; params (a, b).
/// - `SaturationLaw`: y = a/(1 + x/p_sat); params (a, p_sat).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    DispersionManifold,
    PowerLaw,
    SaturationLaw,
}

impl ModelKind {
    pub fn param_count(self) -> usize {
        match self {
            ModelKind::DispersionManifold => 3,
            ModelKind::PowerLaw | ModelKind::SaturationLaw => 2,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::DispersionManifold => &["scale", "center", "offset"],
            ModelKind::PowerLaw => &["a", "b"],
            ModelKind::SaturationLaw => &["a", "p_sat"],
        }
    }
}

/// A model ready to evaluate: the kind plus whatever fixed data it needs.
#[derive(Debug, Clone, Copy)]
pub enum Model<'a> {
    DispersionManifold(&'a ManifoldShape),
    PowerLaw,
    SaturationLaw,
}

impl<'a> Model<'a> {
    /// Pairs `kind` with the lineshape, which only the dispersion model uses.
    pub fn new(kind: ModelKind, shape: Option<&'a ManifoldShape>) -> Result<Self> {
        Ok(match kind {
            ModelKind::DispersionManifold => Model::DispersionManifold(
                shape.ok_or_else(|| Error::domain("the dispersion model needs a manifold lineshape"))?,
            ),
            ModelKind::PowerLaw => Model::PowerLaw,
            ModelKind::SaturationLaw => Model::SaturationLaw,
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::DispersionManifold(_) => ModelKind::DispersionManifold,
            Model::PowerLaw => ModelKind::PowerLaw,
            Model::SaturationLaw => ModelKind::SaturationLaw,
        }
    }

    pub fn eval(&self, x: f64, p: &[f64]) -> f64 {
        match self {
            Model::DispersionManifold(shape) => {
                let chi = shape.normalized_dispersion(x - p[1]).unwrap_or(f64::NAN);
                p[0] * chi + p[2]
            }
            Model::PowerLaw => p[0] * x.powf(p[1]),
            Model::SaturationLaw => p[0] / (1.0 + x / p[1]),
        }
    }

    /// Domain checks on the abscissae.
    pub fn check_x(&self, x: &[f64]) -> Result<()> {
        match self {
            Model::PowerLaw | Model::SaturationLaw if x.iter().any(|&v| v <= 0.0) => {
                Err(Error::domain("power-law and saturation-law fits need positive x"))
            }
            _ => Ok(()),
        }
    }

    /// Data-driven starting point and default bounds. Independent of the
    /// order of the points.
    pub fn initial_guess(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<Bound>)> {
        self.check_x(x)?;
        if x.len() < 2 {
            return Err(Error::domain("need at least two points for an initial guess"));
        }
        if x.len() != y.len() {
            return Err(Error::domain("x and y differ in length"));
        }
        let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        self.guess_sorted(&x, &y)
    }

    fn guess_sorted(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<Bound>)> {
        match self {
            Model::DispersionManifold(shape) => {
                let (i_max, _) =
                    y.iter().enumerate().fold(
                        (0, f64::MIN),
                        |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc },
                    );
                let ext = shape.dispersion_extremum().detuning;
                let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let y_range = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                let width = hi - lo;
                Ok((
                    vec![y[i_max], x[i_max] - ext, 0.0],
                    vec![
                        Bound::FREE,
                        Bound {
                            lo: Some(lo - width),
                            hi: Some(hi + width),
                        },
                        Bound {
                            lo: Some(-10.0 * y_range),
                            hi: Some(10.0 * y_range),
                        },
                    ],
                ))
            }
            Model::PowerLaw => {
                if y.iter().any(|&v| v <= 0.0) {
                    return Ok((vec![1.0, 1.0], vec![Bound::FREE; 2]));
                }
                let fit = super::loglog_slope(x, y)?;
                Ok((vec![fit.intercept.exp(), fit.slope], vec![Bound::FREE; 2]))
            }
            Model::SaturationLaw => {
                // 1/y = 1/a + x/(a·p_sat) is linear in x
                let n = x.len() as f64;
                let inv: Vec<f64> = y.iter().map(|v| 1.0 / v).collect();
                let mx = x.iter().sum::<f64>() / n;
                let my = inv.iter().sum::<f64>() / n;
                let sxy: f64 = x.iter().zip(&inv).map(|(a, b)| (a - mx) * (b - my)).sum();
                let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
                let slope = sxy / sxx;
                let intercept = my - slope * mx;
                let x_min = x[0];
                let (a, p) = if slope > 0.0 && intercept > 0.0 && slope.is_finite() {
                    (1.0 / intercept, intercept / slope)
                } else {
                    let p = x[x.len() / 2];
                    (y[0] * (1.0 + x[0] / p), p)
                };
                Ok((
                    vec![a, p],
                    vec![
                        Bound::FREE,
                        Bound {
                            lo: Some(1e-6 * x_min),
                            hi: None,
                        },
                    ],
                ))
            }
        }
    }
}
