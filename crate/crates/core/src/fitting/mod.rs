//! Bounded Levenberg-Marquardt least squares for spectra and power sweeps,
//! confidence intervals, and log-log slopes.

mod lm;
mod models;

pub use models::{Model, ModelKind};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::atomic_model::ManifoldShape;
use crate::error::{Error, Result};

/// Closed interval for one parameter; a missing end is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bound {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl Bound {
    pub const FREE: Bound = Bound { lo: None, hi: None };

    pub fn contains(&self, v: f64) -> bool {
        self.lo.is_none_or(|lo| v >= lo) && self.hi.is_none_or(|hi| v <= hi)
    }

    pub fn clamp(&self, v: f64) -> f64 {
        let v = self.lo.map_or(v, |lo| v.max(lo));
        self.hi.map_or(v, |hi| v.min(hi))
    }

    fn width(&self) -> Option<f64> {
        Some(self.hi? - self.lo?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitProblem {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_y: Option<Vec<f64>>,
    pub model: ModelKind,
    pub initial_params: Vec<f64>,
    pub bounds: Vec<Bound>,
}

impl FitProblem {
    /// Problem with a data-driven starting point and the model's default bounds.
    pub fn with_initial_guess(x: Vec<f64>, y: Vec<f64>, sigma_y: Option<Vec<f64>>, model: &Model<'_>) -> Result<Self> {
        let (initial_params, bounds) = model.initial_guess(&x, &y)?;
        Ok(Self {
            x,
            y,
            sigma_y,
            model: model.kind(),
            initial_params,
            bounds,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.model.param_count();
        if self.x.len() != self.y.len() {
            return Err(Error::domain(format!(
                "x has {} points but y has {}",
                self.x.len(),
                self.y.len()
            )));
        }
        if self.x.len() < k + 1 {
            return Err(Error::domain(format!(
                "{} points cannot constrain {k} parameters (need at least {})",
                self.x.len(),
                k + 1
            )));
        }
        if let Some(s) = &self.sigma_y {
            if s.len() != self.x.len() {
                return Err(Error::domain("sigma_y length differs from the data"));
            }
            if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::domain("sigma_y entries must be positive and finite"));
            }
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::domain("fit data contain NaN or infinite values"));
        }
        if self.initial_params.len() != k || self.bounds.len() != k {
            return Err(Error::domain(format!(
                "model {:?} takes {k} parameters and bounds",
                self.model
            )));
        }
        for (i, (p, b)) in self.initial_params.iter().zip(&self.bounds).enumerate() {
            if !p.is_finite() || !b.contains(*p) {
                return Err(Error::domain(format!(
                    "initial value {p} of {} lies outside its bounds",
                    self.model.param_names()[i]
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitResult {
    pub model: ModelKind,
    pub params: Vec<f64>,
    /// `None` when the normal matrix is singular at the optimum.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Phase at the dispersion extremum (dispersion model only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_phase_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl FitResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn std_errors(&self) -> Option<Vec<f64>> {
        self.covariance
            .as_ref()
            .map(|c| (0..c.len()).map(|i| c[i][i].max(0.0).sqrt()).collect())
    }
}

/// Reciprocal condition number below which the normal matrix counts as singular.
const SINGULAR_RCOND: f64 = 1e-14;

/// Fits `problem`. The lineshape is needed only for the dispersion model.
///
/// Data are sorted by (x, y) before fitting so the result does not depend on
/// the order the points were supplied in. Without `sigma_y` the covariance is
/// scaled by the residual variance; with it the covariance is absolute.
pub fn least_squares_fit(problem: &FitProblem, shape: Option<&ManifoldShape>) -> Result<FitResult> {
    problem.validate()?;
    let model = Model::new(problem.model, shape)?;
    model.check_x(&problem.x)?;

    let mut order: Vec<usize> = (0..problem.x.len()).collect();
    order.sort_by(|&i, &j| {
        problem.x[i]
            .total_cmp(&problem.x[j])
            .then(problem.y[i].total_cmp(&problem.y[j]))
    });
    let x: Vec<f64> = order.iter().map(|&i| problem.x[i]).collect();
    let y: Vec<f64> = order.iter().map(|&i| problem.y[i]).collect();
    let sigma: Vec<f64> = match &problem.sigma_y {
        Some(s) => order.iter().map(|&i| s[i]).collect(),
        None => vec![1.0; x.len()],
    };

    let residuals = |p: &[f64]| {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(&y)
                .zip(&sigma)
                .map(|((&xi, &yi), &si)| (model.eval(xi, p) - yi) / si),
        )
    };
    let out = lm::minimize(residuals, &problem.initial_params, &problem.bounds);

    let n = x.len();
    let k = out.params.len();
    let residual_rms = (x
        .iter()
        .zip(&y)
        .map(|(&xi, &yi)| (model.eval(xi, &out.params) - yi).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();

    let mut converged = out.converged;
    let mut diagnostic = (!converged).then(|| format!("no convergence within {} iterations", lm::MAX_ITERATIONS));

    // invert JᵀJ in column-equilibrated form so parameter units do not matter
    let jtj = out.jacobian.transpose() * &out.jacobian;
    let d: Vec<f64> = (0..k).map(|i| jtj[(i, i)].sqrt()).collect();
    let covariance = if d.iter().all(|v| *v > 0.0 && v.is_finite()) {
        let scaled = nalgebra::DMatrix::from_fn(k, k, |i, j| jtj[(i, j)] / (d[i] * d[j]));
        let eig = scaled.clone().symmetric_eigen();
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if lo > SINGULAR_RCOND * hi {
            scaled.cholesky().map(|c| {
                let inv = c.inverse();
                let s2 = if problem.sigma_y.is_some() {
                    1.0
                } else {
                    2.0 * out.cost / (n - k) as f64
                };
                (0..k)
                    .map(|i| (0..k).map(|j| s2 * inv[(i, j)] / (d[i] * d[j])).collect())
                    .collect::<Vec<Vec<f64>>>()
            })
        } else {
            None
        }
    } else {
        None
    };
    if covariance.is_none() {
        converged = false;
        diagnostic = Some("singular Jacobian at the optimum: parameters are not identifiable from these data".into());
    }

    Ok(FitResult {
        model: problem.model,
        derived_phase_max: matches!(problem.model, ModelKind::DispersionManifold).then(|| out.params[0]),
        params: out.params,
        covariance,
        residual_rms,
        converged,
        iterations: out.iterations,
        diagnostic,
    })
}

/// Two-sided intervals `param ± z·σ` from the covariance diagonal, with z the
/// normal quantile for `level`.
pub fn confidence_interval(result: &FitResult, level: f64) -> Result<Vec<(f64, f64)>> {
    if !result.converged {
        return Err(Error::domain("confidence intervals need a converged fit"));
    }
    let se = result
        .std_errors()
        .ok_or_else(|| Error::domain("fit has no covariance"))?;
    let z = normal_quantile(level)?;
    Ok(result
        .params
        .iter()
        .zip(se)
        .map(|(p, s)| (p - z * s, p + z * s))
        .collect())
}

/// Two-sided standard normal quantile for confidence `level` in (0, 1).
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

/// Ordinary least squares of ln y on ln x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95 % interval on the slope (Student t, n − 2
    /// degrees of freedom); infinite for two points.
    pub slope_ci: f64,
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain(
            "log-log fit needs two or more (x, y) pairs of equal length",
        ));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::domain("log-log fit needs strictly positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("log-log fit needs at least two distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_ci = if lx.len() > 2 {
        let sse: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        let dof = n - 2.0;
        let se = (sse / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::domain(e.to_string()))?
            .inverse_cdf(0.975);
        t * se
    } else {
        f64::INFINITY
    };
    Ok(LogLogFit {
        slope,
        intercept,
        slope_ci,
    })
}

/// How repeated spectra are reduced to one phase estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumCombination {
    /// Fit each spectrum, then average the fitted maxima.
    #[default]
    MeanOfFits,
    /// Average the spectra point by point, then fit once.
    FitOfMean,
}

/// Fitted maximum phase from several spectra on a shared detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedPhase {
    pub phase_max: f64,
    /// Standard error of `phase_max`.
    pub std_error: f64,
    pub fits: Vec<FitResult>,
}

pub fn fit_dispersion_spectra(
    grid: &[f64],
    spectra: &[Vec<f64>],
    shape: &ManifoldShape,
    how: SpectrumCombination,
) -> Result<CombinedPhase> {
    if spectra.is_empty() {
        return Err(Error::domain("no spectra to fit"));
    }
    if spectra.iter().any(|s| s.len() != grid.len()) {
        return Err(Error::domain("spectrum length differs from the grid"));
    }
    let model = Model::DispersionManifold(shape);
    let fit = |y: Vec<f64>| -> Result<FitResult> {
        let problem = FitProblem::with_initial_guess(grid.to_vec(), y, None, &model)?;
        least_squares_fit(&problem, Some(shape))
    };
    match how {
        SpectrumCombination::MeanOfFits => {
            let fits = spectra.iter().map(|s| fit(s.clone())).collect::<Result<Vec<_>>>()?;
            let values: Vec<f64> = fits.iter().map(|f| f.params[0]).collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std_error = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                fits[0].std_errors().map_or(f64::NAN, |s| s[0])
            };
            Ok(CombinedPhase {
                phase_max: mean,
                std_error,
                fits,
            })
        }
        SpectrumCombination::FitOfMean => {
            let n = spectra.len() as f64;
            let mean: Vec<f64> = (0..grid.len())
                .map(|i| spectra.iter().map(|s| s[i]).sum::<f64>() / n)
                .collect();
            let f = fit(mean)?;
            Ok(CombinedPhase {
                phase_max: f.params[0],
                std_error: f.std_errors().map_or(f64::NAN, |s| s[0]),
                fits: vec![f],
            })
        }
    }
}
