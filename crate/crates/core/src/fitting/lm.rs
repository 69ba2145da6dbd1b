use nalgebra::{DMatrix, DVector};

use super::Bound;

pub(crate) const MAX_ITERATIONS: usize = 200;
const INITIAL_LAMBDA: f64 = 1e-3;
const LAMBDA_UP: f64 = 10.0;
const LAMBDA_DOWN: f64 = 0.1;
const LAMBDA_MAX: f64 = 1e16;
const REL_COST_TOL: f64 = 1e-10;
const GRAD_TOL: f64 = 1e-12;
const JACOBIAN_REL_STEP: f64 = 1e-6;

pub(crate) struct Outcome {
    pub params: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after each accepted step, starting with the initial cost.
    #[cfg_attr(not(test), allow(dead_code))]
    pub cost_trace: Vec<f64>,
}

fn project(p: &mut [f64], bounds: &[Bound]) {
    for (v, b) in p.iter_mut().zip(bounds) {
        *v = b.clamp(*v);
    }
}

fn cost_of(r: &DVector<f64>) -> f64 {
    0.5 * r.norm_squared()
}

/// Central-difference Jacobian of the residual vector.
fn jacobian(residuals: &impl Fn(&[f64]) -> DVector<f64>, p: &[f64], scales: &[f64], n: usize) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(n, p.len());
    let mut work = p.to_vec();
    for j in 0..p.len() {
        let h = JACOBIAN_REL_STEP * p[j].abs().max(scales[j]);
        work[j] = p[j] + h;
        let plus = residuals(&work);
        work[j] = p[j] - h;
        let minus = residuals(&work);
        work[j] = p[j];
        jac.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    jac
}

/// Bounded Levenberg-Marquardt on `residuals`, with Marquardt's diagonal
/// scaling and bounds enforced by projection.
pub(crate) fn minimize(residuals: impl Fn(&[f64]) -> DVector<f64>, p0: &[f64], bounds: &[Bound]) -> Outcome {
    let scales: Vec<f64> = p0
        .iter()
        .zip(bounds)
        .map(|(&p, b)| match b.width() {
            Some(w) if w > 0.0 => 1e-3 * w,
            _ if p != 0.0 => p.abs(),
            _ => 1.0,
        })
        .collect();

    let mut p = p0.to_vec();
    project(&mut p, bounds);
    let mut r = residuals(&p);
    let n = r.len();
    let mut cost = cost_of(&r);
    let mut cost_trace = vec![cost];
    let mut lambda = INITIAL_LAMBDA;
    let mut jac = jacobian(&residuals, &p, &scales, n);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let grad = jac.transpose() * &r;
        if grad.norm() < GRAD_TOL {
            converged = true;
            break;
        }
        let jtj = jac.transpose() * &jac;
        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let mut damped = jtj.clone();
            for i in 0..p.len() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= LAMBDA_UP;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial, bounds);
            let r_trial = residuals(&trial);
            let c_trial = cost_of(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let rel = (cost - c_trial) / cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                cost_trace.push(cost);
                lambda = (lambda * LAMBDA_DOWN).max(1e-12);
                accepted = true;
                if rel < REL_COST_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= LAMBDA_UP;
        }
        if !accepted {
            // no step of any damping lowers the cost: stationary to working precision
            converged = true;
            break;
        }
        jac = jacobian(&residuals, &p, &scales, n);
        if converged {
            break;
        }
    }

    Outcome {
        params: p,
        jacobian: jac,
        cost,
        iterations,
        converged,
        cost_trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimum() {
        let res = |p: &[f64]| DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let out = minimize(res, &[-1.2, 1.0], &[Bound::FREE, Bound::FREE]);
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-8 && (out.params[1] - 1.0).abs() < 1e-8);
        assert!(out.cost_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn respects_bounds() {
        // unconstrained minimum at 3, upper bound 2
        let res = |p: &[f64]| DVector::from_vec(vec![p[0] - 3.0]);
        let b = Bound {
            lo: Some(0.0),
            hi: Some(2.0),
        };
        let out = minimize(res, &[1.0], &[b]);
        assert_eq!(out.params[0], 2.0);
        assert!(out.converged);
    }
}
