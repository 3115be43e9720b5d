//! States where `B` has a real double zero `b` outside the support, and the
//! continuation in `gamma` along them that ends at the type III masses
//! `Gamma1` and `Gamma2`.
//!
//! Along the manifold the mass `t` is a function of `gamma`. With
//! `w = sqrt(A(z2))` and `P(x) = Re(w (x - conj z2))`, the polynomial
//! `L = P - P(b)/D2(b) D2` drives the derivatives of `a1`, `a2`, `b` and `t`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{critical_cubic, gamma_tilde_window, phi_second, GammaTildeWindow};
use crate::numerics::{newton_solve, NewtonOptions};
use crate::solver::{residue_pair, sqrt_a_unchecked};
use crate::types::ChargeConfig;

/// Residue equations with `B = (z - b)^2`.
pub fn double_root_residuals(cfg: &ChargeConfig, t: f64, a1: f64, a2: f64, b: f64) -> [f64; 4] {
    residue_pair(cfg, t, &[a1, a2], |z| (z - b) * (z - b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleRootState {
    pub t: f64,
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
}

impl DoubleRootState {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 < self.a2) {
            return Err(Error::state(format!("endpoints out of order: {} >= {}", self.a1, self.a2)));
        }
        if self.b > self.a1 && self.b < self.a2 {
            return Err(Error::state(format!("double zero {} inside the support", self.b)));
        }
        Ok(())
    }

    pub fn config(&self, beta1: f64, beta2: f64) -> Result<ChargeConfig> {
        ChargeConfig::new(beta1, beta2, self.gamma)
    }

    pub fn residuals(&self, beta1: f64, beta2: f64) -> Result<[f64; 4]> {
        let cfg = self.config(beta1, beta2)?;
        Ok(double_root_residuals(&cfg, self.t, self.a1, self.a2, self.b))
    }

    /// `b` right of the support.
    pub fn b_right(&self) -> bool {
        self.b >= self.a2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediatrixGeometry {
    /// Where the perpendicular bisector of `[z1, z2]` meets the real axis.
    pub x0: f64,
    /// Where the circle about `x0` through both charges meets the real axis.
    pub x1: f64,
    pub x2: f64,
    pub radius: f64,
}

pub fn mediatrix_geometry(beta1: f64, beta2: f64) -> MediatrixGeometry {
    let x0 = 0.25 * (beta2 * beta2 - beta1 * beta1);
    let radius = ((x0 + 1.0).powi(2) + beta1 * beta1).sqrt();
    MediatrixGeometry { x0, x1: x0 - radius, x2: x0 + radius, radius }
}

impl MediatrixGeometry {
    /// `max_j |Arg(zj - x1) - Arg(zj - x0)/2|` over both charges.
    pub fn half_angle_residual(&self, cfg: &ChargeConfig) -> f64 {
        [cfg.z1(), cfg.z2()]
            .iter()
            .map(|&z| ((z - self.x1).arg() - 0.5 * (z - self.x0).arg()).abs())
            .fold(0.0, f64::max)
    }
}

/// Whether `Arg(z - c) + Arg(z - d) < pi` for `Im z > 0`.
pub fn arg_sum_test(z: Complex64, c: f64, d: f64) -> bool {
    (z - c).arg() + (z - d).arg() < PI
}

/// The closed-form answer to [`arg_sum_test`]: `c + d < 2 Re z`.
pub fn arg_sum_prediction(z: Complex64, c: f64, d: f64) -> bool {
    c + d < 2.0 * z.re
}

/// Residuals of the argument identities at both charges satisfied by every
/// double-root state.
pub fn argument_identity_residuals(cfg: &ChargeConfig, s: &DoubleRootState) -> [f64; 2] {
    let g = mediatrix_geometry(cfg.beta1(), cfg.beta2());
    let half = |z: Complex64| 0.5 * (z - s.a1).arg() + 0.5 * (z - s.a2).arg();
    let (z1, z2) = (cfg.z1(), cfg.z2());
    let r1 = half(z1) + 2.0 * (z1 - s.b).arg() - (z1 - g.x0).arg() - 3.0 * FRAC_PI_2;
    let r2 = half(z2) + 2.0 * (z2 - s.b).arg() - (z2 - g.x0).arg() - FRAC_PI_2;
    [r1, r2]
}

/// `b` and the support midpoint both lie in `(-1, 1)`.
pub fn double_root_bounds_hold(s: &DoubleRootState) -> bool {
    let mid = 0.5 * (s.a1 + s.a2);
    s.b > -1.0 && s.b < 1.0 && mid > -1.0 && mid < 1.0
}

/// `L(x) = leading (x - b)(x - ell)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LPolynomial {
    pub leading: f64,
    pub b: f64,
    pub ell: f64,
    /// `dt/dgamma = H(b)/D2(b)`.
    pub t_dot: f64,
    /// Ascending coefficients.
    pub coeffs: [f64; 3],
}

impl LPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs[0] + x * (self.coeffs[1] + x * self.coeffs[2])
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.coeffs[1] + 2.0 * x * self.coeffs[2]
    }
}

/// `H(x) = D2(x) + Re(sqrt(A(z2)) (x - conj z2))` on the real line.
pub fn h_polynomial(cfg: &ChargeConfig, s: &DoubleRootState) -> [f64; 3] {
    let w = sqrt_a_unchecked(cfg.z2(), &[s.a1, s.a2]);
    let b2 = cfg.beta2();
    // Re(w (x - 1 + i beta2)) = w.re (x - 1) - beta2 w.im
    [1.0 + b2 * b2 - w.re - b2 * w.im, -2.0 + w.re, 1.0]
}

pub fn l_polynomial(cfg: &ChargeConfig, s: &DoubleRootState) -> LPolynomial {
    let h = h_polynomial(cfg, s);
    let b2 = cfg.beta2();
    let d2 = [1.0 + b2 * b2, -2.0, 1.0];
    let at = |c: &[f64; 3], x: f64| c[0] + x * (c[1] + x * c[2]);
    let t_dot = at(&h, s.b) / at(&d2, s.b);
    let coeffs = [h[0] - t_dot * d2[0], h[1] - t_dot * d2[1], h[2] - t_dot * d2[2]];
    let leading = coeffs[2];
    let ell = -coeffs[1] / coeffs[2] - s.b;
    LPolynomial { leading, b: s.b, ell, t_dot, coeffs }
}

/// Derivatives of `(a1, a2, b, t)` with respect to `gamma` along the
/// double-root manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaRates {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub t: f64,
}

pub fn gamma_continuation_rhs(cfg: &ChargeConfig, s: &DoubleRootState) -> Result<GammaRates> {
    s.validate()?;
    if (cfg.gamma() - s.gamma).abs() > 1e-15 * s.gamma.max(1.0) {
        return Err(Error::invalid("configuration and state disagree on gamma"));
    }
    let l = l_polynomial(cfg, s);
    let k = cfg.total_mass() - s.t;
    let (a1, a2, b) = (s.a1, s.a2, s.b);
    let den1 = k * (a1 - a2) * (a1 - b).powi(2);
    let den2 = k * (a2 - a1) * (a2 - b).powi(2);
    let denb = 2.0 * k * (b - a1) * (b - a2);
    if den1 == 0.0 || den2 == 0.0 || denb == 0.0 {
        return Err(Error::Collision("double zero meets an endpoint".into()));
    }
    Ok(GammaRates {
        a1: -2.0 * cfg.d1(a1) * l.eval(a1) / den1,
        a2: -2.0 * cfg.d1(a2) * l.eval(a2) / den2,
        b: -cfg.d1(b) * l.derivative(b) / denb,
        t: l.t_dot,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationOptions {
    pub newton: NewtonOptions,
    /// Mass at which the branch leaves the degenerate end of the window.
    pub t_start: f64,
    /// Initial step in `log gamma`.
    pub initial_step: f64,
    pub max_step: f64,
    /// The terminal solve starts once `|b - a|` drops below this.
    pub switch_distance: f64,
    pub max_steps: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions { tol: 1e-12, ..NewtonOptions::default() },
            t_start: 1e-6,
            initial_step: 1e-3,
            max_step: 0.05,
            switch_distance: 2e-2,
            max_steps: 20_000,
        }
    }
}

/// One branch of the manifold, from the window end to the type III point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaBranch {
    pub start: DoubleRootState,
    /// Every accepted state along the way, including the terminal one.
    pub visited: Vec<DoubleRootState>,
    /// The type III configuration: `b` equals an endpoint.
    pub terminal: DoubleRootState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaInterval {
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub window: GammaTildeWindow,
    pub lower: GammaBranch,
    pub upper: GammaBranch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

fn solve_at_fixed_t(beta1: f64, beta2: f64, t: f64, seed: [f64; 4], opts: &NewtonOptions) -> Result<DoubleRootState> {
    let report = newton_solve(
        |y| {
            let cfg = ChargeConfig::new(beta1, beta2, y[3])?;
            Ok(double_root_residuals(&cfg, t, y[0], y[1], y[2]).to_vec())
        },
        &seed,
        opts,
    )?;
    if !report.converged {
        return Err(Error::NotConverged(Box::new(report)));
    }
    let y = &report.solution;
    let s = DoubleRootState { t, gamma: y[3], a1: y[0], a2: y[1], b: y[2] };
    s.validate()?;
    Ok(s)
}

fn solve_at_fixed_gamma(cfg: &ChargeConfig, seed: [f64; 4], opts: &NewtonOptions) -> Result<(DoubleRootState, usize)> {
    let total = cfg.total_mass();
    let report = newton_solve(
        |y| {
            if !(y[3] > 0.0 && y[3] < total) {
                return Err(Error::invalid("mass left (0, T)"));
            }
            Ok(double_root_residuals(cfg, y[3], y[0], y[1], y[2]).to_vec())
        },
        &seed,
        opts,
    )?;
    if !report.converged {
        return Err(Error::NotConverged(Box::new(report)));
    }
    let y = &report.solution;
    let s = DoubleRootState { t: y[3], gamma: cfg.gamma(), a1: y[0], a2: y[1], b: y[2] };
    s.validate()?;
    Ok((s, report.iterations))
}

/// Type III point: `b` coincides with the endpoint nearest to it; unknowns
/// are the two endpoints, the mass and `gamma`.
fn solve_terminal(beta1: f64, beta2: f64, from: &DoubleRootState, side: Side, opts: &NewtonOptions) -> Result<DoubleRootState> {
    let (seed, touch_right) = match side {
        Side::Lower => ([from.a1, 0.5 * (from.a2 + from.b), from.t, from.gamma], true),
        Side::Upper => ([0.5 * (from.a1 + from.b), from.a2, from.t, from.gamma], false),
    };
    let report = newton_solve(
        |y| {
            let cfg = ChargeConfig::new(beta1, beta2, y[3])?;
            let b = if touch_right { y[1] } else { y[0] };
            Ok(double_root_residuals(&cfg, y[2], y[0], y[1], b).to_vec())
        },
        &seed,
        opts,
    )?;
    if !report.converged {
        return Err(Error::NotConverged(Box::new(report)));
    }
    let y = &report.solution;
    let b = if touch_right { y[1] } else { y[0] };
    let s = DoubleRootState { t: y[2], gamma: y[3], a1: y[0], a2: y[1], b };
    s.validate()?;
    Ok(s)
}

/// The double-root state leaving the degenerate end of the window at small
/// `t`: the support sits at the simple minimum, `b` at the double point.
pub fn branch_start(beta1: f64, beta2: f64, window: &GammaTildeWindow, upper: bool, opts: &ContinuationOptions) -> Result<DoubleRootState> {
    let (gamma, x_double) = if upper {
        (window.gamma_tilde_2, window.double_point_2)
    } else {
        (window.gamma_tilde_1, window.double_point_1)
    };
    let cfg = ChargeConfig::new(beta1, beta2, gamma)?;
    let p = critical_cubic(&cfg);
    // the roots of P sum to -p2/p3
    let zeta = -p[2] / p[3] - 2.0 * x_double;
    let second = phi_second(&cfg, zeta);
    if !(second > 0.0) {
        return Err(Error::DegenerateMinimum { x: zeta, second });
    }
    let w = (2.0 * opts.t_start / second).sqrt();
    solve_at_fixed_t(beta1, beta2, opts.t_start, [zeta - w, zeta + w, x_double, gamma], &opts.newton)
}

fn trace_branch(beta1: f64, beta2: f64, window: &GammaTildeWindow, side: Side, opts: &ContinuationOptions) -> Result<GammaBranch> {
    let start = branch_start(beta1, beta2, window, side == Side::Upper, opts)?;
    let direction = if side == Side::Lower { -1.0 } else { 1.0 };
    let gap = |s: &DoubleRootState| match side {
        Side::Lower => s.b - s.a2,
        Side::Upper => s.a1 - s.b,
    };
    let mut visited = vec![start];
    let mut current = start;
    let mut h = opts.initial_step;
    for _ in 0..opts.max_steps {
        let scale = 1.0 + (current.a2 - current.a1);
        if gap(&current) < opts.switch_distance * scale {
            if let Ok(terminal) = solve_terminal(beta1, beta2, &current, side, &opts.newton) {
                visited.push(terminal);
                return Ok(GammaBranch { start, visited, terminal });
            }
        }
        let cfg = ChargeConfig::new(beta1, beta2, current.gamma)?;
        let rates = gamma_continuation_rhs(&cfg, &current)?;
        let gamma_next = current.gamma * (direction * h).exp();
        let dg = gamma_next - current.gamma;
        let seed = [
            current.a1 + dg * rates.a1,
            current.a2 + dg * rates.a2,
            current.b + dg * rates.b,
            current.t + dg * rates.t,
        ];
        let next_cfg = ChargeConfig::new(beta1, beta2, gamma_next)?;
        let attempt = solve_at_fixed_gamma(&next_cfg, seed, &opts.newton);
        let accepted = match attempt {
            Ok((s, iters)) if gap(&s) > 0.0 && s.t > current.t => Some((s, iters)),
            _ => None,
        };
        match accepted {
            Some((s, iters)) => {
                current = s;
                visited.push(s);
                if iters <= 3 {
                    h = (h * 1.5).min(opts.max_step);
                }
            }
            None => {
                h *= 0.5;
                if h < 1e-14 {
                    return Err(Error::inconsistent(format!(
                        "continuation stalled at gamma = {} (b - a = {:e})",
                        current.gamma,
                        gap(&current)
                    )));
                }
            }
        }
    }
    Err(Error::inconsistent("continuation exceeded the step budget"))
}

/// `(Gamma1, Gamma2)`: the masses `gamma` at which a type III singularity
/// occurs. Absent unless the heights lie in `Omega0`.
pub fn find_gamma_interval(beta1: f64, beta2: f64) -> Result<Option<GammaInterval>> {
    find_gamma_interval_with(beta1, beta2, &ContinuationOptions::default())
}

pub fn find_gamma_interval_with(beta1: f64, beta2: f64, opts: &ContinuationOptions) -> Result<Option<GammaInterval>> {
    let Some(window) = gamma_tilde_window(beta1, beta2)? else {
        return Ok(None);
    };
    if window.is_degenerate() {
        return Ok(None);
    }
    let lower = trace_branch(beta1, beta2, &window, Side::Lower, opts)?;
    let upper = trace_branch(beta1, beta2, &window, Side::Upper, opts)?;
    let (gamma_1, gamma_2) = (lower.terminal.gamma, upper.terminal.gamma);
    if !(gamma_1 < window.gamma_tilde_1 && window.gamma_tilde_2 < gamma_2) {
        return Err(Error::inconsistent(format!(
            "ordering violated: Gamma1 = {gamma_1}, window = ({}, {}), Gamma2 = {gamma_2}",
            window.gamma_tilde_1, window.gamma_tilde_2
        )));
    }
    Ok(Some(GammaInterval { gamma_1, gamma_2, window, lower, upper }))
}

/// Where the two bounding surfaces of the two-cut body meet above the curve.
pub fn cover_intersection_gamma(beta1: f64, beta2: f64) -> f64 {
    let (x, y) = (3.0 * beta1 * beta1, 3.0 * beta2 * beta2);
    let q = (x + y - 4.0) / (x - 4.0);
    -0.5 * q + 0.5 * (q * q - 4.0 * (y - 4.0) / (x - 4.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn geometry_examples() {
        let g = mediatrix_geometry(0.7, 0.7);
        assert_eq!(g.x0, 0.0);
        assert!((g.x1 + g.x2).abs() < 1e-15);
        assert_eq!(mediatrix_geometry(1.0, 2.0).x0, 0.75);
        let cfg = ChargeConfig::new(1.0, 2.0, 1.0).unwrap();
        let g = mediatrix_geometry(1.0, 2.0);
        assert!(((g.x0 - 1.0).powi(2) + 4.0 - g.radius * g.radius).abs() < 1e-12);
        assert!(g.x1 < g.x0 && g.x0 < g.x2);
        assert!(g.half_angle_residual(&cfg) < 1e-12);
    }

    #[test]
    fn half_angle_random_heights() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let (b1, b2) = (rng.random_range(0.01..5.0), rng.random_range(0.01..5.0));
            let cfg = ChargeConfig::new(b1, b2, 1.0).unwrap();
            assert!(mediatrix_geometry(b1, b2).half_angle_residual(&cfg) < 1e-12);
        }
    }

    #[test]
    fn arg_sum_samples() {
        let z1 = Complex64::new(-1.0, 0.4);
        let z2 = Complex64::new(1.0, 0.9);
        assert!(arg_sum_test(z1, -1.1, -1.1));
        assert!(arg_sum_test(z2, 0.0, 1.9));
        assert!(!arg_sum_test(z2, 0.5, 1.9));
    }

    #[test]
    fn degenerate_start_residual_vanishes() {
        let w = gamma_tilde_window(0.3, 0.3).unwrap().unwrap();
        let cfg = ChargeConfig::new(0.3, 0.3, w.gamma_tilde_1).unwrap();
        let p = critical_cubic(&cfg);
        let zeta = -p[2] / p[3] - 2.0 * w.double_point_1;
        let r = double_root_residuals(&cfg, 0.0, zeta, zeta, w.double_point_1);
        assert!(r.iter().all(|v| v.abs() < 1e-9), "{r:?}");
    }

    #[test]
    fn sign_pattern_and_ell() {
        let opts = ContinuationOptions::default();
        let w = gamma_tilde_window(0.3, 0.3).unwrap().unwrap();
        let s = branch_start(0.3, 0.3, &w, false, &opts).unwrap();
        let cfg = ChargeConfig::new(0.3, 0.3, s.gamma).unwrap();
        assert!(s.a2 <= s.b);
        let r = gamma_continuation_rhs(&cfg, &s).unwrap();
        assert!(r.a1 > 0.0 && r.a2 < 0.0 && r.b > 0.0, "{r:?}");
        let l = l_polynomial(&cfg, &s);
        assert!(l.eval(s.b).abs() < 1e-12);
        assert!(l.ell > l.b);
        assert!(l.leading > 0.0);
    }

    #[test]
    fn rates_match_resolves() {
        let opts = ContinuationOptions::default();
        let (b1, b2) = (0.3, 0.45);
        let w = gamma_tilde_window(b1, b2).unwrap().unwrap();
        let start = branch_start(b1, b2, &w, false, &opts).unwrap();
        // move inside the manifold first
        let g = 0.8 * start.gamma;
        let cfg = ChargeConfig::new(b1, b2, g).unwrap();
        let seed = [start.a1 - 0.3, start.a2 + 0.3, start.b, 0.2];
        let (s, _) = solve_at_fixed_gamma(&cfg, seed, &opts.newton).unwrap();
        let r = gamma_continuation_rhs(&cfg, &s).unwrap();
        let h = 1e-5;
        let x = |gg: f64| solve_at_fixed_gamma(&ChargeConfig::new(b1, b2, gg).unwrap(), [s.a1, s.a2, s.b, s.t], &opts.newton).unwrap().0;
        let (p, m) = (x(g + h), x(g - h));
        let fd = [(p.a1 - m.a1) / (2.0 * h), (p.a2 - m.a2) / (2.0 * h), (p.b - m.b) / (2.0 * h), (p.t - m.t) / (2.0 * h)];
        let an = [r.a1, r.a2, r.b, r.t];
        for (u, v) in fd.iter().zip(an) {
            assert!((u - v).abs() < 1e-5 * (1.0 + v.abs()), "{fd:?} vs {an:?}");
        }
    }

    #[test]
    fn interval_ordering_symmetric_heights() {
        let gi = find_gamma_interval(0.3, 0.3).unwrap().unwrap();
        assert!(gi.gamma_1 < gi.window.gamma_tilde_1);
        assert!(gi.window.gamma_tilde_2 < gi.gamma_2);
        assert!((gi.gamma_1 * gi.gamma_2 - 1.0).abs() < 1e-6);
        assert!((gi.lower.terminal.b - gi.lower.terminal.a2).abs() < 1e-14);
        for s in gi.lower.visited.iter().chain(&gi.upper.visited) {
            let cfg = ChargeConfig::new(0.3, 0.3, s.gamma).unwrap();
            let r = argument_identity_residuals(&cfg, s);
            assert!(r[0].abs() < 1e-8 && r[1].abs() < 1e-8, "{r:?} at {s:?}");
            assert!(double_root_bounds_hold(s));
        }
    }

    #[test]
    fn no_interval_outside() {
        assert!(find_gamma_interval(0.5, 2.7).unwrap().is_none());
    }

    #[test]
    fn cover_formula_at_unit_point() {
        assert!((cover_intersection_gamma(1.0, 1.0) - 1.0).abs() < 1e-12);
    }
}
