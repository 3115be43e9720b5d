//! Direct solution of the residue equations at fixed mass.
//!
//! With `R1 = i beta1 (z1 - z2)(z1 - conj z2)` and
//! `R2 = i gamma beta2 (z2 - z1)(z2 - conj z1)` the polynomials `A`, `B`
//! satisfy `(T - t) B(zj) sqrt(A(zj)) = Rj` at both charges. The one-cut
//! unknowns are `(a1, a2, s, p)` with `B = z^2 - s z + p`, which stays smooth
//! when the zeros of `B` pass from a conjugate pair to a real pair. The
//! two-cut unknowns are `(a1, a2, a3, a4, b1)` and the system is closed by the
//! vanishing of the total-potential increment across the gap.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::field_breakpoints;
use crate::numerics::{newton_solve, tanh_sinh_quad_offsets, NewtonOptions, NewtonReport, QuadOptions};
use crate::types::{BZeros, ChargeConfig, SupportState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub newton: NewtonOptions,
    /// Relative accuracy of the gap and validity quadratures.
    pub quad_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { newton: NewtonOptions::default(), quad_tol: 1e-13 }
    }
}

/// Residual of the one-cut (4 entries) or two-cut (5 entries) system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualVector(pub Vec<f64>);

impl ResidualVector {
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// `prod sqrt(z - a_i)` with every factor on the principal branch; for
/// `Im z > 0` each factor has argument in `(0, pi/2)`.
pub fn sqrt_a_upper(z: Complex64, endpoints: &[f64]) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::invalid(format!("sqrt_a_upper needs Im z > 0, got {z}")));
    }
    Ok(sqrt_a_unchecked(z, endpoints))
}

pub(crate) fn sqrt_a_unchecked(z: Complex64, endpoints: &[f64]) -> Complex64 {
    endpoints.iter().fold(Complex64::new(1.0, 0.0), |acc, &a| acc * (z - a).sqrt())
}

/// Right-hand sides `(R1, R2)` of the residue equations.
pub fn residue_targets(cfg: &ChargeConfig) -> (Complex64, Complex64) {
    let (z1, z2) = (cfg.z1(), cfg.z2());
    let i = Complex64::i();
    let r1 = i * cfg.beta1() * (z1 - z2) * (z1 - z2.conj());
    let r2 = i * cfg.gamma() * cfg.beta2() * (z2 - z1) * (z2 - z1.conj());
    (r1, r2)
}

/// Residue equations for `B` with the given values at the charges.
pub(crate) fn residue_pair(cfg: &ChargeConfig, t: f64, endpoints: &[f64], b_at: impl Fn(Complex64) -> Complex64) -> [f64; 4] {
    let (r1, r2) = residue_targets(cfg);
    let k = cfg.total_mass() - t;
    let (z1, z2) = (cfg.z1(), cfg.z2());
    let e1 = k * b_at(z1) * sqrt_a_unchecked(z1, endpoints) - r1;
    let e2 = k * b_at(z2) * sqrt_a_unchecked(z2, endpoints) - r2;
    [e1.re, e1.im, e2.re, e2.im]
}

/// One-cut residuals in the internal coordinates `x = (a1, a2, s, p)`.
pub fn residuals_onecut_raw(cfg: &ChargeConfig, t: f64, x: &[f64]) -> [f64; 4] {
    let (s, p) = (x[2], x[3]);
    residue_pair(cfg, t, &x[..2], |z| z * z - z * s + p)
}

pub fn residuals_onecut(cfg: &ChargeConfig, t: f64, state: &SupportState) -> Result<ResidualVector> {
    match *state {
        SupportState::OneCut { .. } => Ok(ResidualVector(residuals_onecut_raw(cfg, t, &onecut_unknowns(state)?).to_vec())),
        _ => Err(Error::state("one-cut residuals need a one-cut state")),
    }
}

/// `int_{a2}^{a3} (x - b1) sqrt|A(x)| / D(x) dx`.
pub fn gap_integral(cfg: &ChargeConfig, a: &[f64; 4], b1: f64, tol: f64) -> Result<f64> {
    if !(a[0] < a[1] && a[1] < a[2] && a[2] < a[3]) {
        return Err(Error::state(format!("endpoints out of order: {a:?}")));
    }
    let (lo, hi) = (a[1], a[2]);
    let mut knots = vec![lo];
    knots.extend(field_breakpoints(cfg).iter().copied().filter(|&p| p > lo && p < hi));
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (p, q) = (w[0], w[1]);
        let r = tanh_sinh_quad_offsets(
            |x, dl, dr| {
                // offsets keep the factors vanishing at a2, a3 accurate
                let f2 = if p == lo { dl } else { x - lo };
                let f3 = if q == hi { dr } else { hi - x };
                let quartic = (x - a[0]) * f2 * f3 * (a[3] - x);
                debug_assert!(quartic >= 0.0);
                (x - b1) * quartic.sqrt() / cfg.d(x)
            },
            p,
            q,
            QuadOptions::with_tol(tol),
        );
        total += r.into_result()?;
    }
    Ok(total)
}

pub fn residuals_twocut_raw(cfg: &ChargeConfig, t: f64, x: &[f64], tol: f64) -> Result<[f64; 5]> {
    let a = [x[0], x[1], x[2], x[3]];
    let b1 = x[4];
    let r = residue_pair(cfg, t, &a, |z| z - b1);
    let g = gap_integral(cfg, &a, b1, tol)?;
    Ok([r[0], r[1], r[2], r[3], g])
}

pub fn residuals_twocut(cfg: &ChargeConfig, t: f64, state: &SupportState) -> Result<ResidualVector> {
    match *state {
        SupportState::TwoCut { a, b1, .. } => {
            let x = [a[0], a[1], a[2], a[3], b1];
            Ok(ResidualVector(residuals_twocut_raw(cfg, t, &x, SolverOptions::default().quad_tol)?.to_vec()))
        }
        _ => Err(Error::state("two-cut residuals need a two-cut state")),
    }
}

/// Residuals of whichever system matches the phase of `state`, at its own `t`.
pub fn residuals(cfg: &ChargeConfig, state: &SupportState) -> Result<ResidualVector> {
    match state {
        SupportState::OneCut { .. } => residuals_onecut(cfg, state.t(), state),
        SupportState::TwoCut { .. } => residuals_twocut(cfg, state.t(), state),
    }
}

/// `(a1, a2, s, p)` of a one-cut state.
pub fn onecut_unknowns(state: &SupportState) -> Result<[f64; 4]> {
    match *state {
        SupportState::OneCut { a1, a2, b, .. } => Ok([a1, a2, b.sum(), b.product()]),
        _ => Err(Error::state("expected a one-cut state")),
    }
}

pub fn onecut_from_unknowns(t: f64, x: &[f64]) -> SupportState {
    SupportState::OneCut { t, a1: x[0], a2: x[1], b: BZeros::from_sum_product(x[2], x[3]) }
}

pub fn twocut_unknowns(state: &SupportState) -> Result<[f64; 5]> {
    match *state {
        SupportState::TwoCut { a, b1, .. } => Ok([a[0], a[1], a[2], a[3], b1]),
        _ => Err(Error::state("expected a two-cut state")),
    }
}

pub fn twocut_from_unknowns(t: f64, x: &[f64]) -> SupportState {
    SupportState::TwoCut { t, a: [x[0], x[1], x[2], x[3]], b1: x[4] }
}

fn finish(report: NewtonReport, build: impl Fn(&[f64]) -> SupportState) -> Result<SupportState> {
    if !report.converged {
        return Err(Error::NotConverged(Box::new(report)));
    }
    let state = build(&report.solution);
    state.validate()?;
    Ok(state)
}

pub fn solve_onecut_report(cfg: &ChargeConfig, t: f64, seed: &[f64; 4], opts: &SolverOptions) -> Result<NewtonReport> {
    cfg.check_mass(t)?;
    newton_solve(|x| Ok(residuals_onecut_raw(cfg, t, x).to_vec()), seed, &opts.newton)
}

/// Newton solve of the one-cut system at mass `t` from a one-cut seed.
pub fn solve_onecut(cfg: &ChargeConfig, t: f64, seed: &SupportState, opts: &SolverOptions) -> Result<SupportState> {
    let x0 = onecut_unknowns(seed)?;
    let report = solve_onecut_report(cfg, t, &x0, opts)?;
    finish(report, |x| onecut_from_unknowns(t, x))
}

pub fn solve_twocut_report(cfg: &ChargeConfig, t: f64, seed: &[f64; 5], opts: &SolverOptions) -> Result<NewtonReport> {
    cfg.check_mass(t)?;
    let tol = opts.quad_tol;
    newton_solve(
        |x| {
            if !(x[0] < x[1] && x[1] < x[2] && x[2] < x[3]) {
                return Err(Error::state("endpoints crossed during the iteration"));
            }
            Ok(residuals_twocut_raw(cfg, t, x, tol)?.to_vec())
        },
        seed,
        &opts.newton,
    )
}

/// Newton solve of the two-cut system at mass `t` from a two-cut seed.
pub fn solve_twocut(cfg: &ChargeConfig, t: f64, seed: &SupportState, opts: &SolverOptions) -> Result<SupportState> {
    let x0 = twocut_unknowns(seed)?;
    let report = solve_twocut_report(cfg, t, &x0, opts)?;
    finish(report, |x| twocut_from_unknowns(t, x))
}

/// Solve in whichever phase the seed is in.
pub fn solve(cfg: &ChargeConfig, t: f64, seed: &SupportState, opts: &SolverOptions) -> Result<SupportState> {
    match seed {
        SupportState::OneCut { .. } => solve_onecut(cfg, t, seed, opts),
        SupportState::TwoCut { .. } => solve_twocut(cfg, t, seed, opts),
    }
}

/// Default starting mass for [`seed_small_t`].
pub fn default_t0(cfg: &ChargeConfig) -> f64 {
    1e-4 * cfg.total_mass()
}

/// Two minima whose field values differ by less than this start two-cut.
pub const EQUAL_MINIMA_TOL: f64 = 1e-9;

/// A solved state at small mass `t0`, built from the local semicircle at each
/// global minimum of the field.
pub fn seed_small_t(cfg: &ChargeConfig, t0: f64, opts: &SolverOptions) -> Result<SupportState> {
    use crate::field::{classify_critical_points, phi_second};
    cfg.check_mass(t0)?;
    let cp = classify_critical_points(cfg)?;
    let global = cp.global_minima(EQUAL_MINIMA_TOL);
    let width = |zeta: f64, m: f64| -> Result<f64> {
        let second = phi_second(cfg, zeta);
        if !(second > 0.0) {
            return Err(Error::DegenerateMinimum { x: zeta, second });
        }
        Ok((2.0 * m / second).sqrt())
    };
    if let Some(&x) = cp.degenerate.first() {
        if global.is_empty() {
            return Err(Error::DegenerateMinimum { x, second: phi_second(cfg, x) });
        }
    }
    match global.as_slice() {
        [zeta] => {
            let w = width(*zeta, t0)?;
            let (s, p) = if let Some(z) = cp.complex_pair {
                (2.0 * z.re, z.norm_sqr())
            } else {
                let others: Vec<f64> =
                    cp.minima.iter().chain(&cp.maxima).copied().filter(|x| (x - zeta).abs() > 1e-12).collect();
                match others.as_slice() {
                    [u, v] => (u + v, u * v),
                    _ => return Err(Error::inconsistent("expected two further critical points")),
                }
            };
            let report = solve_onecut_report(cfg, t0, &[zeta - w, zeta + w, s, p], opts)?;
            finish(report, |x| onecut_from_unknowns(t0, x))
        }
        [left, right] => {
            let (wl, wr) = (width(*left, 0.5 * t0)?, width(*right, 0.5 * t0)?);
            let b1 = *cp.maxima.first().ok_or_else(|| Error::inconsistent("two minima without a maximum"))?;
            let seed = [left - wl, left + wl, right - wr, right + wr, b1];
            let report = solve_twocut_report(cfg, t0, &seed, opts)?;
            finish(report, |x| twocut_from_unknowns(t0, x))
        }
        _ => Err(Error::inconsistent("no global minimum of the field")),
    }
}

/// `(T - t) int B sqrt|A| / D` from the support to the outer zero of `B`,
/// which equals the total potential at that zero minus the equilibrium
/// constant. Positive while the equilibrium inequality is strict there.
pub fn onecut_validity_integral(cfg: &ChargeConfig, t: f64, state: &SupportState) -> Result<f64> {
    onecut_validity_integral_tol(cfg, t, state, SolverOptions::default().quad_tol)
}

pub fn onecut_validity_integral_tol(cfg: &ChargeConfig, t: f64, state: &SupportState, tol: f64) -> Result<f64> {
    let SupportState::OneCut { a1, a2, b, .. } = *state else {
        return Err(Error::state("validity integral needs a one-cut state"));
    };
    let BZeros::RealPair { lo, hi } = b else {
        return Err(Error::state("validity integral needs a real pair of B zeros"));
    };
    let (from, to, right) = if lo >= a2 {
        (a2, hi, true)
    } else if hi <= a1 {
        (lo, a1, false)
    } else {
        return Err(Error::state("B zeros inside the support"));
    };
    let mut knots = vec![from];
    knots.extend(field_breakpoints(cfg).iter().copied().filter(|&p| p > from && p < to));
    knots.push(to);
    knots.sort_by(f64::total_cmp);
    let (s, p) = (b.sum(), b.product());
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (u, v) = (w[0], w[1]);
        let r = tanh_sinh_quad_offsets(
            |x, dl, dr| {
                let (d1, d2) = if right {
                    (x - a1, if u == from { dl } else { x - a2 })
                } else {
                    (if v == to { dr } else { a1 - x }, a2 - x)
                };
                (x * x - s * x + p) * (d1 * d2).abs().sqrt() / cfg.d(x)
            },
            u,
            v,
            QuadOptions::with_tol(tol),
        );
        total += r.into_result()?;
    }
    Ok((cfg.total_mass() - t) * total)
}

/// `(T - t) B(z) sqrt(A(z)) / D(z)` for `Im z > 0`, the combination
/// `phi' - (Cauchy transform)` off the real line.
pub fn ab_representation(cfg: &ChargeConfig, state: &SupportState, z: Complex64) -> Result<Complex64> {
    let sa = sqrt_a_upper(z, &state.endpoints())?;
    Ok((cfg.total_mass() - state.t()) * state.b_poly_complex(z) * sa / cfg.d_complex(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sqrt_a_examples() {
        let r = sqrt_a_upper(Complex64::i(), &[-1.0, 1.0]).unwrap();
        assert!((r.norm_sqr() - 2.0).abs() < 1e-14);
        let want = 0.5 * (Complex64::i() + 1.0).arg() + 0.5 * (Complex64::i() - 1.0).arg();
        assert!((r.arg() - want).abs() < 1e-14);
        let r = sqrt_a_upper(Complex64::new(0.0, 0.7), &[-0.4, 0.4]).unwrap();
        assert!(r.re.abs() < 1e-15 && r.im > 0.0);
        assert!(sqrt_a_upper(Complex64::new(1.0, 0.0), &[0.0]).is_err());
    }

    #[test]
    fn symmetric_fusion_state_solves() {
        let beta: f64 = 0.5;
        let cfg = ChargeConfig::symmetric(beta).unwrap();
        let t2 = 2.0 * (1.0 - beta).powi(2) / (1.0 + beta * beta);
        let a = (2.0 * (1.0 - beta * beta)).sqrt();
        let r = residuals_onecut_raw(&cfg, t2, &[-a, a, 0.0, 0.0]);
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn symmetric_onecut_conjugate_pair() {
        let cfg = ChargeConfig::symmetric(1.5).unwrap();
        let seed = SupportState::one_cut(0.5, -1.0, 1.0, BZeros::ConjugatePair { re: 0.0, im: 1.4 }).unwrap();
        let s = solve_onecut(&cfg, 0.5, &seed, &SolverOptions::default()).unwrap();
        let SupportState::OneCut { a1, a2, b, .. } = s else { panic!() };
        assert!((a1 + a2).abs() < 1e-10);
        match b {
            BZeros::ConjugatePair { re, im } => assert!(re.abs() < 1e-10 && im > 0.0),
            other => panic!("{other:?}"),
        }
        // symmetry-reduced oracle: unknowns (a, q) with A = z^2 - a^2, B = z^2 + q
        let oracle = newton_solve(
            |y| {
                let r = residuals_onecut_raw(&cfg, 0.5, &[-y[0], y[0], 0.0, y[1]]);
                Ok(vec![r[0], r[1]])
            },
            &[1.0, 2.0],
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(oracle.converged);
        assert!((a2 - oracle.solution[0]).abs() < 1e-9);
        assert!((b.product() - oracle.solution[1]).abs() < 1e-9);
    }

    #[test]
    fn residual_grows_off_solution() {
        let cfg = ChargeConfig::symmetric(1.5).unwrap();
        let seed = SupportState::one_cut(0.5, -1.0, 1.0, BZeros::ConjugatePair { re: 0.0, im: 1.4 }).unwrap();
        let s = solve_onecut(&cfg, 0.5, &seed, &SolverOptions::default()).unwrap();
        let mut x = onecut_unknowns(&s).unwrap();
        assert!(residuals_onecut_raw(&cfg, 0.5, &x).iter().all(|v| v.abs() < 1e-10));
        x[1] += 1e-3;
        let n = residuals_onecut_raw(&cfg, 0.5, &x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(n > 1e-5 && n < 1e-1);
    }

    #[test]
    fn gap_integral_odd_for_symmetric_state() {
        let cfg = ChargeConfig::symmetric(0.5).unwrap();
        let g = gap_integral(&cfg, &[-1.2, -0.3, 0.3, 1.2], 0.0, 1e-13).unwrap();
        assert!(g.abs() < 1e-15);
        let plus = gap_integral(&cfg, &[-1.2, -0.3, 0.3, 1.2], 0.01, 1e-13).unwrap();
        let minus = gap_integral(&cfg, &[-1.2, -0.3, 0.3, 1.2], -0.01, 1e-13).unwrap();
        assert!(plus < 0.0 && minus > 0.0);
    }

    #[test]
    fn twocut_symmetric_solve() {
        let cfg = ChargeConfig::symmetric(0.5).unwrap();
        let seed = SupportState::two_cut(0.1, [-1.1, -0.5, 0.5, 1.1], 0.01).unwrap();
        let s = solve_twocut(&cfg, 0.1, &seed, &SolverOptions::default()).unwrap();
        let SupportState::TwoCut { a, b1, .. } = s else { panic!() };
        assert!((a[0] + a[3]).abs() < 1e-9 && (a[1] + a[2]).abs() < 1e-9 && b1.abs() < 1e-9);
        let r = residuals_twocut(&cfg, 0.1, &s).unwrap();
        assert!(r.norm_inf() < 1e-10);
    }

    #[test]
    fn continuation_is_cheap() {
        let cfg = ChargeConfig::symmetric(1.5).unwrap();
        let seed = SupportState::one_cut(0.5, -1.0, 1.0, BZeros::ConjugatePair { re: 0.0, im: 1.4 }).unwrap();
        let opts = SolverOptions::default();
        let s = solve_onecut(&cfg, 0.5, &seed, &opts).unwrap();
        let report = solve_onecut_report(&cfg, 0.501, &onecut_unknowns(&s).unwrap(), &opts).unwrap();
        assert!(report.converged && report.iterations <= 4, "{}", report.iterations);
    }

    #[test]
    fn seed_small_t_symmetric() {
        let cfg = ChargeConfig::symmetric(1.5).unwrap();
        let s = seed_small_t(&cfg, default_t0(&cfg), &SolverOptions::default()).unwrap();
        let SupportState::OneCut { a1, a2, .. } = s else { panic!() };
        assert!((a1 + a2).abs() < 1e-9);
        assert!(a2 > 0.0 && a2 < 0.1);
    }

    #[test]
    fn degree_bookkeeping_at_infinity() {
        let cfg = ChargeConfig::new(0.4, 0.9, 1.3).unwrap();
        let s = seed_small_t(&cfg, 0.01, &SolverOptions::default()).unwrap();
        let z = Complex64::new(0.0, 1e6);
        let v = ab_representation(&cfg, &s, z).unwrap() * z;
        assert!((v - (cfg.total_mass() - 0.01)).norm() < 1e-5);
    }

    #[test]
    fn polar_form_matches() {
        let cfg = ChargeConfig::new(0.4, 0.9, 1.3).unwrap();
        let s = seed_small_t(&cfg, 0.02, &SolverOptions::default()).unwrap();
        let (r1, _) = residue_targets(&cfg);
        let lhs = s.b_poly_complex(cfg.z1()) * sqrt_a_upper(cfg.z1(), &s.endpoints()).unwrap();
        let diff = (lhs.arg() - r1.arg()).rem_euclid(2.0 * PI);
        assert!(diff < 1e-9 || (2.0 * PI - diff) < 1e-9);
    }
}
