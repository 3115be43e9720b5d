//! Evolution of the support in the mass `t`.
//!
//! Between singular masses the endpoints and the zeros of `B` obey an
//! autonomous system driven by `D`. One-cut states are integrated in the
//! coordinates `(a1, a2, s, p)` with `B = z^2 - s z + p`, two-cut states in
//! `(a1, a2, a3, a4, b1)`. Events end a phase; the state is then rebuilt in
//! the new phase by a Newton solve and integration resumes.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::criticality::{double_root_residuals, find_gamma_interval};
use crate::error::{Error, Result};
use crate::field::gamma_tilde_window;
use crate::numerics::{complex_roots, newton_solve, tanh_sinh_quad_offsets, DenseStep, Dopri5, OdeOptions, QuadOptions};
use crate::region::{classify, Region};
use crate::solver::{
    default_t0, onecut_from_unknowns, onecut_unknowns, onecut_validity_integral_tol, residuals_onecut_raw,
    residuals_twocut_raw, seed_small_t, solve_onecut_report, solve_twocut_report, twocut_from_unknowns,
    twocut_unknowns, SolverOptions,
};
use crate::types::{BZeros, ChargeConfig, PhaseDiagram, Scenario, SupportState, TransitionEvent, TransitionKind};

/// The point of the gap `(a2, a3)` where `F(x) = x - zeta` makes the gap
/// period of `F / sqrt|A|` vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaValue {
    pub zeta: f64,
}

impl ZetaValue {
    pub fn f(&self, x: f64) -> f64 {
        x - self.zeta
    }
}

pub fn zeta(a: &[f64; 4]) -> Result<ZetaValue> {
    zeta_with_tol(a, 1e-13)
}

pub fn zeta_with_tol(a: &[f64; 4], tol: f64) -> Result<ZetaValue> {
    if !(a[0] < a[1] && a[1] < a[2] && a[2] < a[3]) {
        return Err(Error::state(format!("endpoints out of order: {a:?}")));
    }
    let weight = |x: f64, dl: f64, dr: f64| 1.0 / ((x - a[0]) * dl * dr * (a[3] - x)).sqrt();
    let opts = QuadOptions::with_tol(tol);
    let i0 = tanh_sinh_quad_offsets(weight, a[1], a[2], opts).into_result()?;
    let i1 = tanh_sinh_quad_offsets(|x, dl, dr| dl * weight(x, dl, dr), a[1], a[2], opts).into_result()?;
    Ok(ZetaValue { zeta: a[1] + i1 / i0 })
}

fn collision_scale(points: &[f64]) -> f64 {
    1e-12 * (1.0 + points.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// `d/dt (a1, a2, s, p)` for a one-cut state.
pub fn rhs_onecut(cfg: &ChargeConfig, t: f64, y: &[f64]) -> Result<[f64; 4]> {
    let k = cfg.total_mass() - t;
    if !(k > 0.0) {
        return Err(Error::invalid(format!("mass {t} not below T")));
    }
    let (a1, a2, s, p) = (y[0], y[1], y[2], y[3]);
    let tiny = collision_scale(&[a1, a2, s]);
    if !(a2 - a1 > tiny) {
        return Err(Error::Collision(format!("endpoints {a1}, {a2}")));
    }
    let b_real = |x: f64| x * x - s * x + p;
    let (ba1, ba2) = (b_real(a1), b_real(a2));
    if ba1.abs() <= tiny || ba2.abs() <= tiny {
        return Err(Error::Collision("a zero of B meets an endpoint".into()));
    }
    let da1 = 2.0 * cfg.d(a1) / (k * (a1 - a2) * ba1);
    let da2 = 2.0 * cfg.d(a2) / (k * (a2 - a1) * ba2);

    let g = |z: Complex64| cfg.d_complex(z) / (k * (z - a1) * (z - a2));
    let [b1, b2] = BZeros::from_sum_product(s, p).as_complex();
    let m = 0.5 * s;
    let (ds, dp) = if (b1 - b2).norm() >= 1e-6 * (1.0 + m.abs()) {
        let (g1, g2) = (g(b1), g(b2));
        let ds = (g1 - g2) / (b1 - b2);
        let dp = (g1 * b2 - g2 * b1) / (b1 - b2);
        (ds.re, dp.re)
    } else {
        // divided differences at a nearly double zero
        let a_m = (m - a1) * (m - a2);
        let da_m = 2.0 * m - a1 - a2;
        if a_m.abs() <= tiny {
            return Err(Error::Collision("double zero of B at an endpoint".into()));
        }
        let d_m = cfg.d(m);
        let dd_m = 2.0 * (m + 1.0) * cfg.d2(m) + 2.0 * (m - 1.0) * cfg.d1(m);
        let g_m = d_m / (k * a_m);
        let dg_m = (dd_m * a_m - d_m * da_m) / (k * a_m * a_m);
        (dg_m, -g_m + (s - m) * dg_m)
    };
    Ok([da1, da2, ds, dp])
}

/// Rates of the endpoints and of both zeros of `B` at a one-cut state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneCutRates {
    pub a1: f64,
    pub a2: f64,
    pub b: [Complex64; 2],
}

pub fn onecut_rates(cfg: &ChargeConfig, state: &SupportState) -> Result<OneCutRates> {
    let SupportState::OneCut { t, a1, a2, b } = *state else {
        return Err(Error::state("expected a one-cut state"));
    };
    let y = onecut_unknowns(state)?;
    let r = rhs_onecut(cfg, t, &y)?;
    let k = cfg.total_mass() - t;
    let [b1, b2] = b.as_complex();
    if (b1 - b2).norm() <= collision_scale(&[a1, a2, b.sum()]) {
        return Err(Error::Collision("double zero of B".into()));
    }
    let g = |z: Complex64| cfg.d_complex(z) / (k * (z - a1) * (z - a2));
    Ok(OneCutRates { a1: r[0], a2: r[1], b: [g(b1) / (b1 - b2), g(b2) / (b2 - b1)] })
}

/// `Re(D(b)/A(b))` at the upper zero of a conjugate pair; positive exactly
/// when `Im b` decreases.
pub fn imb_decrease_indicator(cfg: &ChargeConfig, state: &SupportState) -> Result<f64> {
    let SupportState::OneCut { a1, a2, b: BZeros::ConjugatePair { re, im }, .. } = *state else {
        return Err(Error::state("expected a one-cut state with a conjugate pair"));
    };
    let z = Complex64::new(re, im);
    Ok((cfg.d_complex(z) / ((z - a1) * (z - a2))).re)
}

fn check_twocut(y: &[f64]) -> Result<()> {
    if !(y[0] < y[1] && y[1] < y[2] && y[2] < y[3]) {
        return Err(Error::Collision(format!("endpoints out of order: {:?}", &y[..4])));
    }
    if !(y[4] > y[1] && y[4] < y[2]) {
        return Err(Error::Collision(format!("b1 = {} left the gap", y[4])));
    }
    Ok(())
}

/// `d/dt (a1, a2, a3, a4, b1)` for a two-cut state.
pub fn rhs_twocut(cfg: &ChargeConfig, t: f64, y: &[f64]) -> Result<[f64; 5]> {
    rhs_twocut_tol(cfg, t, y, 1e-13)
}

fn rhs_twocut_tol(cfg: &ChargeConfig, t: f64, y: &[f64], tol: f64) -> Result<[f64; 5]> {
    let k = cfg.total_mass() - t;
    if !(k > 0.0) {
        return Err(Error::invalid(format!("mass {t} not below T")));
    }
    check_twocut(y)?;
    let a = [y[0], y[1], y[2], y[3]];
    let b1 = y[4];
    let z = zeta_with_tol(&a, tol)?;
    let mut out = [0.0; 5];
    for i in 0..4 {
        let dprime: f64 = (0..4).filter(|&j| j != i).map(|j| a[i] - a[j]).product();
        out[i] = 2.0 * cfg.d(a[i]) * z.f(a[i]) / (k * dprime * (a[i] - b1));
    }
    let a_b: f64 = a.iter().map(|ai| b1 - ai).product();
    out[4] = cfg.d(b1) * z.f(b1) / (k * a_b);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    pub solver: SolverOptions,
    /// Accepted steps between Newton re-polishes.
    pub polish_every: usize,
    /// Integration stops at `T (1 - stop_fraction)` by default.
    pub stop_fraction: f64,
    /// Half-width of a newborn cut, relative to the existing support width.
    pub birth_width: f64,
    /// A gap narrower than this fraction of the support triggers the fusion solve.
    pub gap_switch: f64,
    /// Mass offset, relative to `T`, past a fusion where the one-cut phase resumes.
    pub fusion_offset: f64,
    /// Imaginary part of the conjugate-pair seed after a fusion.
    pub fusion_seed_im: f64,
    /// Relative distance from a zero of `B` to an endpoint recorded as type III.
    pub type_three_tol: f64,
    /// Quadrature accuracy used by the event functions and the two-cut rates.
    pub event_quad_tol: f64,
    /// Masses at which the dense output is sampled.
    pub sample_times: Vec<f64>,
    pub max_events: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions { rtol: 1e-10, atol: 1e-12, ..OdeOptions::default() },
            solver: SolverOptions::default(),
            polish_every: 10,
            stop_fraction: 1e-3,
            birth_width: 1e-3,
            gap_switch: 1e-2,
            fusion_offset: 1e-6,
            fusion_seed_im: 1e-4,
            type_three_tol: 1e-6,
            event_quad_tol: 1e-12,
            sample_times: Vec::new(),
            max_events: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum TrajectoryStatus {
    Completed,
    Truncated { t: f64, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: ChargeConfig,
    /// The state after every accepted step, plus the rebuilt state after
    /// each event.
    pub states: Vec<SupportState>,
    pub events: Vec<TransitionEvent>,
    /// States at the requested sample times, from the dense output.
    pub samples: Vec<SupportState>,
    /// Largest relative change made by a Newton re-polish.
    pub max_polish_drift: f64,
    pub polishes: usize,
    pub polish_failures: usize,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&SupportState> {
        self.states.last()
    }

    pub fn is_complete(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }

    /// Largest violation of the monotonicity rule: endpoints with odd index
    /// (counting from 1) never increase, even ones never decrease. Compared
    /// between consecutive states with the same number of cuts.
    pub fn monotonicity_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for w in self.states.windows(2) {
            let (e0, e1) = (w[0].endpoints(), w[1].endpoints());
            if e0.len() != e1.len() {
                continue;
            }
            for (i, (x0, x1)) in e0.iter().zip(&e1).enumerate() {
                let excess = if i % 2 == 0 { x1 - x0 } else { x0 - x1 };
                worst = worst.max(excess / (1.0 + x0.abs()));
            }
        }
        worst
    }
}

struct Recorder {
    states: Vec<SupportState>,
    samples: Vec<SupportState>,
    pending: VecDeque<f64>,
    max_drift: f64,
    polishes: usize,
    polish_failures: usize,
}

impl Recorder {
    fn sample(&mut self, step: &DenseStep, build: &dyn Fn(f64, &[f64]) -> SupportState) {
        while let Some(&ts) = self.pending.front() {
            if ts > step.t1 {
                break;
            }
            self.pending.pop_front();
            if ts >= step.t0 {
                self.samples.push(build(ts, &step.eval(ts)));
            }
        }
    }

    /// Drop states and samples beyond `t`, returning the earliest dropped
    /// state (or the last kept one) as a seed near `t`.
    fn rewind(&mut self, t: f64) -> Option<SupportState> {
        let mut seed = None;
        while self.states.len() > 1 && self.states.last().is_some_and(|s| s.t() > t) {
            seed = self.states.pop();
        }
        while let Some(s) = self.samples.pop_if(|s| s.t() > t) {
            self.pending.push_front(s.t());
        }
        seed.or_else(|| self.states.last().copied())
    }

    fn last_t(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t())
    }
}

enum Control<T> {
    Continue,
    Stop(T),
}

enum Outcome<T> {
    Reached,
    Stopped(T),
}

#[allow(clippy::too_many_arguments)]
fn drive<F, P, C, T>(
    rhs: F,
    t0: f64,
    y0: Vec<f64>,
    t_stop: f64,
    opts: &EvolveOptions,
    rec: &mut Recorder,
    build: &dyn Fn(f64, &[f64]) -> SupportState,
    mut polish: P,
    mut check: C,
) -> Result<Outcome<T>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    P: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    C: FnMut(&DenseStep) -> Result<Control<T>>,
{
    let mut ode = Dopri5::new(rhs, t0, y0, t_stop, opts.ode)?;
    let mut since = 0;
    while ode.t < t_stop {
        if ode.steps >= opts.ode.max_steps {
            return Err(Error::Integration { t: ode.t, reason: "step budget exhausted".into() });
        }
        let step = ode.step(t_stop)?;
        rec.sample(&step, build);
        rec.states.push(build(step.t1, &step.y1));
        if let Control::Stop(x) = check(&step)? {
            return Ok(Outcome::Stopped(x));
        }
        since += 1;
        if since >= opts.polish_every && ode.t < t_stop {
            since = 0;
            match polish(ode.t, &ode.y) {
                Ok(yp) => {
                    let drift = yp.iter().zip(&ode.y).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())).fold(0.0, f64::max);
                    rec.max_drift = rec.max_drift.max(drift);
                    rec.polishes += 1;
                    let t = ode.t;
                    if let Some(last) = rec.states.last_mut() {
                        *last = build(t, &yp);
                    }
                    ode.reset(yp)?;
                }
                Err(_) => rec.polish_failures += 1,
            }
        }
    }
    Ok(Outcome::Reached)
}

/// Bisection for a sign change of `g` on `[lo, hi]`, given `g(lo) > 0`.
fn bisect<G: FnMut(f64) -> Result<f64>>(mut lo: f64, mut hi: f64, tol: f64, mut g: G) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn converged(report: crate::numerics::NewtonReport) -> Result<Vec<f64>> {
    if report.converged {
        Ok(report.solution)
    } else {
        Err(Error::NotConverged(Box::new(report)))
    }
}

fn has(events: &[TransitionEvent], kind: TransitionKind) -> bool {
    events.iter().any(|e| e.kind == kind)
}

/// Validity of a one-cut state: positive while the equilibrium inequality is
/// strict at the outer real zero of `B`, and `+1` for a conjugate pair.
fn validity(cfg: &ChargeConfig, state: &SupportState, tol: f64) -> Result<f64> {
    match state {
        SupportState::OneCut { b: BZeros::RealPair { .. }, t, .. } => onecut_validity_integral_tol(cfg, *t, state, tol),
        _ => Ok(1.0),
    }
}

fn onecut_phase(
    cfg: &ChargeConfig,
    state: &SupportState,
    t_stop: f64,
    opts: &EvolveOptions,
    rec: &mut Recorder,
    events: &mut Vec<TransitionEvent>,
) -> Result<Option<SupportState>> {
    let t0 = state.t();
    let y0 = onecut_unknowns(state)?.to_vec();
    let qtol = opts.event_quad_tol;
    let build = |t: f64, y: &[f64]| onecut_from_unknowns(t, y);
    let rhs = |t: f64, y: &[f64]| rhs_onecut(cfg, t, y).map(|r| r.to_vec());
    let polish = |t: f64, y: &[f64]| converged(solve_onecut_report(cfg, t, &[y[0], y[1], y[2], y[3]], &opts.solver)?);
    let disc = |y: &[f64]| y[2] * y[2] - 4.0 * y[3];
    let validity_at = |step: &DenseStep, t: f64| -> Result<f64> {
        let y = step.eval(t);
        if disc(&y) < 0.0 {
            return Ok(1.0);
        }
        validity(cfg, &build(t, &y), qtol)
    };
    let mut birth_seen = has(events, TransitionKind::ExtremaBirth);
    let mut three_seen = has(events, TransitionKind::TypeIII);
    let mut found: Vec<TransitionEvent> = Vec::new();
    let check = |step: &DenseStep| -> Result<Control<f64>> {
        let mut lower = step.t0;
        if disc(&step.y0) < 0.0 && disc(&step.y1) >= 0.0 && !birth_seen {
            let tb = bisect(step.t0, step.t1, opts.ode.event_tol, |t| Ok(-disc(&step.eval(t))))?;
            let yb = step.eval(tb);
            found.push(TransitionEvent { kind: TransitionKind::ExtremaBirth, t: tb, location: 0.5 * yb[2] });
            birth_seen = true;
            lower = tb;
        }
        let s1 = build(step.t1, &step.y1);
        if !three_seen {
            let e = s1.endpoints();
            let width = e[1] - e[0];
            for b in s1.b_zeros() {
                for &a in &e {
                    if (b - a).norm() < opts.type_three_tol * width {
                        found.push(TransitionEvent { kind: TransitionKind::TypeIII, t: step.t1, location: a });
                        three_seen = true;
                    }
                }
            }
        }
        if disc(&step.y1) >= 0.0 && validity(cfg, &s1, qtol)? <= 0.0 {
            let start = if validity_at(step, lower)? > 0.0 { lower } else { step.t0 };
            let t1 = bisect(start, step.t1, opts.ode.event_tol, |t| validity_at(step, t))?;
            return Ok(Control::Stop(t1));
        }
        Ok(Control::Continue)
    };
    let outcome = drive(rhs, t0, y0, t_stop, opts, rec, &build, polish, check);
    events.append(&mut found);
    let t_guess = match outcome? {
        Outcome::Reached => return Ok(None),
        Outcome::Stopped(t) => t,
    };
    let last = rec.rewind(t_guess).ok_or_else(|| Error::inconsistent("no state recorded"))?;
    // the stopping step interpolant is gone; re-solve at the bracketed mass
    let y = converged(solve_onecut_report(cfg, t_guess, &onecut_unknowns(&last)?, &opts.solver)?)?;
    birth_from_onecut(cfg, t_guess, &y, opts, events).map(Some)
}

/// Locate the birth mass exactly, record the event and build the two-cut
/// state just after it.
fn birth_from_onecut(
    cfg: &ChargeConfig,
    t_guess: f64,
    y: &[f64],
    opts: &EvolveOptions,
    events: &mut Vec<TransitionEvent>,
) -> Result<SupportState> {
    let qtol = opts.solver.quad_tol;
    let tc = newton_solve(
        |x| {
            cfg.check_mass(x[4])?;
            let r = residuals_onecut_raw(cfg, x[4], x);
            let v = validity(cfg, &onecut_from_unknowns(x[4], x), qtol)?;
            Ok(vec![r[0], r[1], r[2], r[3], v])
        },
        &[y[0], y[1], y[2], y[3], t_guess],
        &opts.solver.newton,
    )?;
    let x = converged(tc)?;
    let t1 = x[4];
    let critical = onecut_from_unknowns(t1, &x);
    let SupportState::OneCut { a1, a2, b: BZeros::RealPair { lo, hi }, .. } = critical else {
        return Err(Error::inconsistent("birth state lost its real zeros"));
    };
    let right = lo >= a2;
    let outer = if right { hi } else { lo };
    events.push(TransitionEvent { kind: TransitionKind::TypeI, t: t1, location: outer });

    let w = opts.birth_width * (a2 - a1);
    let layout = move |v: &[f64]| -> [f64; 5] {
        // v = (a1, a2, b1, c, t)
        if right {
            [v[0], v[1], v[3] - w, v[3] + w, v[2]]
        } else {
            [v[3] - w, v[3] + w, v[0], v[1], v[2]]
        }
    };
    let inner = if right { lo } else { hi };
    let report = newton_solve(
        |v| {
            cfg.check_mass(v[4])?;
            let a = layout(v);
            check_twocut(&a)?;
            Ok(residuals_twocut_raw(cfg, v[4], &a, qtol)?.to_vec())
        },
        &[a1, a2, inner, outer, t1],
        &opts.solver.newton,
    )?;
    let v = converged(report)?;
    let t_new = v[4];
    if !(t_new > t1) {
        return Err(Error::inconsistent(format!("newborn cut has mass {t_new} <= {t1}")));
    }
    let s = twocut_from_unknowns(t_new, &layout(&v));
    s.validate()?;
    Ok(s)
}

fn twocut_phase(
    cfg: &ChargeConfig,
    state: &SupportState,
    t_stop: f64,
    opts: &EvolveOptions,
    rec: &mut Recorder,
    events: &mut Vec<TransitionEvent>,
) -> Result<Option<SupportState>> {
    let t0 = state.t();
    let y0 = twocut_unknowns(state)?.to_vec();
    let qtol = opts.event_quad_tol;
    let build = |t: f64, y: &[f64]| twocut_from_unknowns(t, y);
    let rhs = |t: f64, y: &[f64]| rhs_twocut_tol(cfg, t, y, qtol).map(|r| r.to_vec());
    let polish = |t: f64, y: &[f64]| converged(solve_twocut_report(cfg, t, &[y[0], y[1], y[2], y[3], y[4]], &opts.solver)?);
    let check = |step: &DenseStep| -> Result<Control<()>> {
        let y = &step.y1;
        if y[2] - y[1] <= opts.gap_switch * (y[3] - y[0]) {
            return Ok(Control::Stop(()));
        }
        Ok(Control::Continue)
    };
    if let Outcome::Reached = drive(rhs, t0, y0, t_stop, opts, rec, &build, polish, check)? {
        return Ok(None);
    }
    let last = rec.states.last().copied().ok_or_else(|| Error::inconsistent("no state recorded"))?;
    let SupportState::TwoCut { t, a, b1 } = last else {
        return Err(Error::inconsistent("two-cut phase ended in another phase"));
    };
    let total = cfg.total_mass();
    let fused = converged(newton_solve(
        |v| {
            cfg.check_mass(v[3])?;
            if !(v[0] < v[2] && v[2] < v[1]) {
                return Err(Error::state("fusion point outside the support"));
            }
            Ok(double_root_residuals(cfg, v[3], v[0], v[1], v[2]).to_vec())
        },
        &[a[0], a[3], b1, t],
        &opts.solver.newton,
    )?)?;
    let (a1, a2, b, t2) = (fused[0], fused[1], fused[2], fused[3]);
    if !(t2 >= t - 1e-9 * total) {
        return Err(Error::inconsistent(format!("fusion mass {t2} precedes the phase end {t}")));
    }
    events.push(TransitionEvent { kind: TransitionKind::TypeII, t: t2, location: b });
    let t_next = t2 + opts.fusion_offset * total;
    if t_next >= t_stop {
        return Ok(None);
    }
    let im = opts.fusion_seed_im;
    let y = converged(solve_onecut_report(cfg, t_next, &[a1, a2, 2.0 * b, b * b + im * im], &opts.solver)?)?;
    if y[2] * y[2] - 4.0 * y[3] >= 0.0 {
        return Err(Error::inconsistent("zeros of B stayed real after the fusion"));
    }
    let s = onecut_from_unknowns(t_next, &y);
    s.validate()?;
    Ok(Some(s))
}

/// Integrate from a solved state to `t_stop`, passing through singularities.
pub fn evolve(cfg: &ChargeConfig, state0: &SupportState, t_stop: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    state0.validate()?;
    let t0 = state0.t();
    cfg.check_mass(t0)?;
    if !(t_stop > t0 && t_stop < cfg.total_mass()) {
        return Err(Error::invalid(format!("stop mass {t_stop} must lie in ({t0}, T)")));
    }
    let mut times: Vec<f64> = opts.sample_times.iter().copied().filter(|&s| s >= t0 && s <= t_stop).collect();
    times.sort_by(f64::total_cmp);
    let mut rec = Recorder {
        states: vec![*state0],
        samples: Vec::new(),
        pending: times.into(),
        max_drift: 0.0,
        polishes: 0,
        polish_failures: 0,
    };
    while rec.pending.front() == Some(&t0) {
        rec.pending.pop_front();
        rec.samples.push(*state0);
    }
    let mut events = Vec::new();
    let mut state = *state0;
    let mut status = TrajectoryStatus::Completed;
    loop {
        if events.len() > opts.max_events {
            status = TrajectoryStatus::Truncated { t: state.t(), reason: "too many events".into() };
            break;
        }
        let step = match state {
            SupportState::OneCut { .. } => onecut_phase(cfg, &state, t_stop, opts, &mut rec, &mut events),
            SupportState::TwoCut { .. } => twocut_phase(cfg, &state, t_stop, opts, &mut rec, &mut events),
        };
        match step {
            Ok(None) => break,
            Ok(Some(next)) => {
                rec.states.push(next);
                state = next;
            }
            Err(e) => {
                status = TrajectoryStatus::Truncated { t: rec.last_t(), reason: e.to_string() };
                break;
            }
        }
    }
    Ok(Trajectory {
        config: *cfg,
        states: rec.states,
        events,
        samples: rec.samples,
        max_polish_drift: rec.max_drift,
        polishes: rec.polishes,
        polish_failures: rec.polish_failures,
        status,
    })
}

/// Default stopping mass `T (1 - stop_fraction)`.
pub fn default_t_stop(cfg: &ChargeConfig, opts: &EvolveOptions) -> f64 {
    cfg.total_mass() * (1.0 - opts.stop_fraction)
}

/// Evolve from the small-mass seed to `t_stop`.
pub fn evolve_from_start(cfg: &ChargeConfig, t_stop: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    let seed = seed_small_t(cfg, default_t0(cfg), &opts.solver)?;
    evolve(cfg, &seed, t_stop, opts)
}

/// The equilibrium state at mass `t`, reached by evolution from small mass.
pub fn state_at(cfg: &ChargeConfig, t: f64, opts: &EvolveOptions) -> Result<SupportState> {
    cfg.check_mass(t)?;
    let t0 = default_t0(cfg);
    let seed = seed_small_t(cfg, t0.min(0.5 * t), &opts.solver)?;
    if t <= seed.t() {
        return Ok(seed);
    }
    let traj = evolve(cfg, &seed, t, opts)?;
    if let TrajectoryStatus::Truncated { t: at, reason } = &traj.status {
        return Err(Error::Integration { t: *at, reason: reason.clone() });
    }
    let last = *traj.final_state().ok_or_else(|| Error::inconsistent("empty trajectory"))?;
    crate::solver::solve(cfg, t, &last, &opts.solver)
}

/// A charge `gamma` at `z` in the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCharge {
    pub gamma: f64,
    pub z: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitNormalization {
    /// `1/(T pi) sum gamma_j Im z_j / |x - z_j|^2`, of total mass one.
    UnitMass,
    /// The same density times `T`, of total mass `T`.
    TotalMass,
}

/// The limit of the equilibrium measures as `t` approaches the total mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitMeasure {
    pub charges: Vec<PointCharge>,
    pub normalization: LimitNormalization,
}

impl LimitMeasure {
    pub fn new(charges: Vec<PointCharge>, normalization: LimitNormalization) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::invalid("at least one charge is needed"));
        }
        for c in &charges {
            if !(c.gamma > 0.0 && c.z.im > 0.0 && c.z.re.is_finite()) {
                return Err(Error::invalid(format!("charge {} at {} not admissible", c.gamma, c.z)));
            }
        }
        Ok(Self { charges, normalization })
    }

    pub fn from_config(cfg: &ChargeConfig, normalization: LimitNormalization) -> Self {
        Self {
            charges: vec![PointCharge { gamma: 1.0, z: cfg.z1() }, PointCharge { gamma: cfg.gamma(), z: cfg.z2() }],
            normalization,
        }
    }

    pub fn total_charge(&self) -> f64 {
        self.charges.iter().map(|c| c.gamma).sum()
    }

    pub fn mass(&self) -> f64 {
        match self.normalization {
            LimitNormalization::UnitMass => 1.0,
            LimitNormalization::TotalMass => self.total_charge(),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let sum: f64 = self.charges.iter().map(|c| c.gamma * c.z.im / ((x - c.z.re).powi(2) + c.z.im * c.z.im)).sum();
        self.mass() / (self.total_charge() * PI) * sum
    }

    /// Zeros of `sum gamma_j (1/(z - z_j) - 1/(z - conj z_j)) / 2` off the
    /// real line; the limit positions of the zeros of `B`.
    pub fn b_zeros(&self) -> Result<Vec<Complex64>> {
        limit_b_zeros(&self.charges)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn limit_density(charges: &[PointCharge], normalization: LimitNormalization, x: f64) -> Result<f64> {
    Ok(LimitMeasure::new(charges.to_vec(), normalization)?.density(x))
}

/// Roots of `N = sum_j gamma_j Im z_j prod_{l != j} |z - z_l|^2`, the
/// numerator of the limit Cauchy transform, with nonzero imaginary part.
pub fn limit_b_zeros(charges: &[PointCharge]) -> Result<Vec<Complex64>> {
    let quad = |c: &PointCharge| [c.z.norm_sqr(), -2.0 * c.z.re, 1.0];
    let mut numerator = vec![0.0; 2 * charges.len() - 1];
    for (j, cj) in charges.iter().enumerate() {
        let mut term = vec![cj.gamma * cj.z.im];
        for (l, cl) in charges.iter().enumerate() {
            if l != j {
                term = poly_mul(&term, &quad(cl));
            }
        }
        for (acc, t) in numerator.iter_mut().zip(&term) {
            *acc += t;
        }
    }
    if numerator.len() == 1 {
        return Ok(Vec::new());
    }
    let roots = complex_roots(&numerator)?;
    let scale = 1.0 + roots.iter().fold(0.0f64, |m, r| m.max(r.norm()));
    let mut out: Vec<Complex64> = roots.into_iter().filter(|r| r.im.abs() > 1e-12 * scale).collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

/// The scenario the field predicts from the heights and masses alone.
pub fn predict_scenario(cfg: &ChargeConfig) -> Result<Scenario> {
    let region = classify(cfg.beta1(), cfg.beta2())?.region;
    if region != Region::Omega0 {
        return Ok(Scenario::OneCutOutside);
    }
    let window = gamma_tilde_window(cfg.beta1(), cfg.beta2())?
        .ok_or_else(|| Error::inconsistent("Omega0 heights without a two-minima window"))?;
    let g = cfg.gamma();
    if g >= window.gamma_tilde_1 && g <= window.gamma_tilde_2 {
        return Ok(Scenario::TwoMinima);
    }
    let interval = find_gamma_interval(cfg.beta1(), cfg.beta2())?
        .ok_or_else(|| Error::inconsistent("Omega0 heights without critical masses"))?;
    Ok(if g > interval.gamma_1 && g < interval.gamma_2 {
        Scenario::ExtremaThenTwoCut
    } else {
        Scenario::OneCutInOmega0
    })
}

fn check_scenario(scenario: Scenario, initial_cuts: usize, events: &[TransitionEvent]) -> Result<()> {
    use TransitionKind::*;
    let kinds: Vec<TransitionKind> = events.iter().map(|e| e.kind).collect();
    let ok = match scenario {
        Scenario::TwoMinima => match initial_cuts {
            1 => kinds == [TypeI, TypeII],
            _ => kinds == [TypeII],
        },
        Scenario::ExtremaThenTwoCut => initial_cuts == 1 && kinds == [ExtremaBirth, TypeI, TypeII],
        Scenario::OneCutInOmega0 | Scenario::OneCutOutside => {
            initial_cuts == 1 && kinds.iter().all(|k| *k == ExtremaBirth) && kinds.len() <= 1
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::inconsistent(format!(
            "predicted scenario {scenario:?} but detected {kinds:?} from {initial_cuts} cut(s)"
        )))
    }
}

/// Phase diagram in the mass `t` together with the trajectory it came from.
pub fn phase_diagram_with(cfg: &ChargeConfig, opts: &EvolveOptions) -> Result<(PhaseDiagram, Trajectory)> {
    let scenario = predict_scenario(cfg)?;
    let seed = seed_small_t(cfg, default_t0(cfg), &opts.solver)?;
    let traj = evolve(cfg, &seed, default_t_stop(cfg, opts), opts)?;
    if let TrajectoryStatus::Truncated { t, reason } = &traj.status {
        return Err(Error::Integration { t: *t, reason: reason.clone() });
    }
    let initial_cuts = seed.cut_count();
    check_scenario(scenario, initial_cuts, &traj.events)?;
    let diagram = PhaseDiagram::from_events(*cfg, scenario, initial_cuts, traj.events.clone())?;
    Ok((diagram, traj))
}

pub fn phase_diagram(cfg: &ChargeConfig) -> Result<PhaseDiagram> {
    phase_diagram_with(cfg, &EvolveOptions::default()).map(|(d, _)| d)
}
