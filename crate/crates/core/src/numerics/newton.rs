//! Damped Newton iteration with finite-difference Jacobians.
//!
//! Step acceptance uses the natural monotonicity test: the trial point is
//! accepted when the simplified Newton correction `J^{-1} F(x')`, computed with
//! the current factorization, is shorter than the full correction. Both sides
//! are unchanged when the rows of `F` are rescaled.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Convergence when `max |F_i| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step: `h_j = fd_step * (1 + |x_j|)`.
    pub fd_step: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 50, fd_step: 1e-7, max_halvings: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub solution: Vec<f64>,
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// 2-norm condition number of the last Jacobian.
    pub condition: f64,
    pub warning: Option<String>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Central-difference Jacobian of `f` at `x`, using `fx = f(x)` for sizing.
pub fn fd_jacobian<F>(f: &mut F, x: &[f64], m: usize, rel_step: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = rel_step * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let fp = f(&xp)?;
        xp[j] = x[j] - h;
        let fm = f(&xp)?;
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn condition_number(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.clone().singular_values();
    let max = sv.iter().fold(0.0f64, |m, &s| m.max(s));
    let min = sv.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `F(x) = 0` for square systems starting from `x0`.
///
/// Failures of `F` inside the line search are treated as a rejected trial
/// point; a failure at the starting point is returned as an error.
pub fn newton_solve<F>(mut f: F, x0: &[f64], opts: &NewtonOptions) -> Result<NewtonReport>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut norm = inf_norm(&fx);
    let mut condition = f64::NAN;
    let mut warning = None;
    let mut iterations = 0;

    let report = |x: Vec<f64>, fx: Vec<f64>, iterations, condition, warning: Option<String>, tol: f64| {
        let residual_norm = inf_norm(&fx);
        NewtonReport {
            solution: x,
            residual: fx,
            residual_norm,
            iterations,
            converged: residual_norm <= tol,
            condition,
            warning,
        }
    };

    while iterations < opts.max_iter {
        if norm <= opts.tol {
            break;
        }
        iterations += 1;
        let jac = fd_jacobian(&mut f, &x, n, opts.fd_step)?;
        let lu = jac.clone().lu();
        let rhs = DVector::from_row_slice(&fx);
        let delta = match lu.solve(&rhs) {
            Some(d) if d.iter().all(|v| v.is_finite()) => -d,
            _ => {
                condition = condition_number(&jac);
                warning = Some(format!("singular Jacobian (condition {condition:e})"));
                return Ok(report(x, fx, iterations, condition, warning, opts.tol));
            }
        };
        let delta_norm = delta.norm();
        if delta_norm <= 1e-16 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt()) {
            condition = condition_number(&jac);
            warning = Some("Newton step below rounding level".into());
            break;
        }

        let mut lambda = 1.0;
        let mut accepted = None;
        let mut fallback: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, di)| xi + lambda * di).collect();
            if let Ok(ft) = f(&trial) {
                if ft.iter().all(|v| v.is_finite()) {
                    let nt = inf_norm(&ft);
                    if nt <= opts.tol {
                        accepted = Some((trial, ft, nt));
                        break;
                    }
                    let simplified = lu.solve(&DVector::from_row_slice(&ft)).map(|d| d.norm());
                    if let Some(s) = simplified {
                        if s <= (1.0 - 0.25 * lambda) * delta_norm {
                            accepted = Some((trial, ft, nt));
                            break;
                        }
                    }
                    if nt < norm && fallback.as_ref().is_none_or(|fb| nt < fb.2) {
                        fallback = Some((trial, ft, nt));
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted.or(fallback) {
            Some((xt, ft, nt)) => {
                x = xt;
                fx = ft;
                norm = nt;
            }
            None => {
                condition = condition_number(&jac);
                warning = Some(format!("line search failed after {} halvings", opts.max_halvings));
                return Ok(report(x, fx, iterations, condition, warning, opts.tol));
            }
        }
        if iterations == opts.max_iter || norm <= opts.tol {
            condition = condition_number(&jac);
        }
    }
    if norm > opts.tol && warning.is_none() {
        warning = Some(format!("maximum of {} iterations reached", opts.max_iter));
    }
    if condition.is_finite() && condition > 1e12 && warning.is_none() {
        warning = Some(format!("ill-conditioned Jacobian (condition {condition:e})"));
    }
    Ok(report(x, fx, iterations, condition, warning, opts.tol))
}
