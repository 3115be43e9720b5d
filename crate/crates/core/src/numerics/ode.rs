//! Dormand–Prince 5(4) with dense output and event localization.
//!
//! The right-hand side may fail (for example when two density zeros collide);
//! the integrator then stops and reports where and why.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
    /// Width of the final bracket around an event time.
    pub event_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 100_000,
            event_tol: 1e-10,
        }
    }
}

/// An accepted step with its continuous extension.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub y1: Vec<f64>,
    coeffs: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Fifth-order interpolant at any `t` between `t0` and `t1`.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let theta = (t - self.t0) / self.h();
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        (0..r1.len())
            .map(|i| r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i]))))
            .collect()
    }
}

/// Stateful stepper. Integration may go forward or backward in `t`.
pub struct Dopri5<F> {
    rhs: F,
    pub t: f64,
    pub y: Vec<f64>,
    k1: Vec<f64>,
    h: f64,
    direction: f64,
    opts: OdeOptions,
    pub steps: usize,
    pub evaluations: usize,
}

impl<F> Dopri5<F>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    pub fn new(mut rhs: F, t0: f64, y0: Vec<f64>, t_end: f64, opts: OdeOptions) -> Result<Self> {
        let direction = if t_end >= t0 { 1.0 } else { -1.0 };
        let k1 = rhs(t0, &y0)?;
        let mut s = Self { rhs, t: t0, y: y0, k1, h: 0.0, direction, opts, steps: 0, evaluations: 1 };
        s.h = match opts.h0 {
            Some(h) => h.abs() * direction,
            None => s.initial_step(t_end)?,
        };
        Ok(s)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.atol + self.opts.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self, t_end: f64) -> Result<f64> {
        let n = self.y.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..self.y.len() {
            let sc = self.scale(self.y[i], self.y[i]);
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.k1[i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min((t_end - self.t).abs().max(1e-12)).min(self.opts.h_max);
        let y1: Vec<f64> = self.y.iter().zip(&self.k1).map(|(y, k)| y + self.direction * h0 * k).collect();
        let k2 = (self.rhs)(self.t + self.direction * h0, &y1)?;
        self.evaluations += 1;
        let mut d2 = 0.0;
        for ((k, k1), y) in k2.iter().zip(&self.k1).zip(&self.y) {
            d2 += ((k - k1) / self.scale(*y, *y)).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        Ok(self.direction * (100.0 * h0).min(h1).min(self.opts.h_max))
    }

    /// Take one accepted step, never passing `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseStep> {
        let n = self.y.len();
        let mut rejected = false;
        loop {
            let remaining = t_end - self.t;
            if remaining * self.direction <= 0.0 {
                return Err(Error::Integration { t: self.t, reason: "already at the end point".into() });
            }
            let mut h = self.h;
            let mut last = false;
            if (h.abs()) >= remaining.abs() {
                h = remaining;
                last = true;
            }
            if h.abs() < self.opts.h_min * (1.0 + self.t.abs()) {
                return Err(Error::Integration { t: self.t, reason: format!("step size underflow (h = {h:e})") });
            }
            let t = self.t;
            let y = &self.y;
            let k1 = &self.k1;
            let stage = |coef: &[(f64, &Vec<f64>)]| -> Vec<f64> {
                (0..n)
                    .map(|i| y[i] + h * coef.iter().map(|(a, k)| a * k[i]).sum::<f64>())
                    .collect()
            };
            let attempt = (|| -> Result<_> {
                let k2 = (self.rhs)(t + C2 * h, &stage(&[(A21, k1)]))?;
                let k3 = (self.rhs)(t + C3 * h, &stage(&[(A31, k1), (A32, &k2)]))?;
                let k4 = (self.rhs)(t + C4 * h, &stage(&[(A41, k1), (A42, &k2), (A43, &k3)]))?;
                let k5 = (self.rhs)(t + C5 * h, &stage(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
                let k6 = (self.rhs)(
                    t + h,
                    &stage(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
                )?;
                let y1 = stage(&[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
                let k7 = (self.rhs)(t + h, &y1)?;
                Ok((k2, k3, k4, k5, k6, k7, y1))
            })();
            self.evaluations += 6;
            let (_k2, k3, k4, k5, k6, k7, y1) = match attempt {
                Ok(v) => v,
                Err(e) => {
                    // shrink and retry; a genuine singularity shows up as underflow
                    self.h = 0.25 * h;
                    rejected = true;
                    if self.h.abs() < self.opts.h_min * (1.0 + self.t.abs()) {
                        return Err(Error::Integration { t: self.t, reason: e.to_string() });
                    }
                    continue;
                }
            };
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                err += (e / self.scale(y[i], y1[i])).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                self.h = 0.25 * h;
                rejected = true;
                continue;
            }
            if err <= 1.0 {
                let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                fac = fac.clamp(0.2, 5.0);
                if rejected {
                    fac = fac.min(1.0);
                }
                let ydiff: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
                let bspl: Vec<f64> = (0..n).map(|i| h * k1[i] - ydiff[i]).collect();
                let r4: Vec<f64> = (0..n).map(|i| ydiff[i] - h * k7[i] - bspl[i]).collect();
                let r5: Vec<f64> = (0..n)
                    .map(|i| h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                    .collect();
                let dense = DenseStep {
                    t0: t,
                    t1: if last { t_end } else { t + h },
                    y0: y.clone(),
                    y1: y1.clone(),
                    coeffs: [y.clone(), ydiff, bspl, r4, r5],
                };
                self.t = dense.t1;
                self.y = y1;
                self.k1 = k7;
                let next = h * fac;
                self.h = self.direction * next.abs().min(self.opts.h_max);
                self.steps += 1;
                return Ok(dense);
            }
            rejected = true;
            self.h = h * (0.9 * err.powf(-0.2)).max(0.2);
        }
    }

    /// Restart from a corrected state (used after re-polishing).
    pub fn reset(&mut self, y: Vec<f64>) -> Result<()> {
        self.k1 = (self.rhs)(self.t, &y)?;
        self.evaluations += 1;
        self.y = y;
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventHit {
    pub index: usize,
    pub t: f64,
    /// Bracket `[lo, hi]` (in integration order) containing the sign change.
    pub bracket: (f64, f64),
}

/// Bisect on the dense output between `step.t0` and `step.t1`, where `g`
/// changes sign, until the bracket is narrower than `tol`.
pub fn localize_event<G>(step: &DenseStep, g: &mut G, g0: f64, tol: f64) -> Result<(f64, (f64, f64))>
where
    G: FnMut(f64, &[f64]) -> Result<f64>,
{
    let mut lo = step.t0;
    let mut hi = step.t1;
    let mut glo = g0;
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let gm = g(mid, &step.eval(mid))?;
        if gm == 0.0 {
            return Ok((mid, (mid, mid)));
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), (lo, hi)))
}

#[derive(Clone, Debug, PartialEq)]
pub enum OdeStatus {
    Completed,
    /// Stopped at the first crossing of the given event.
    Event(usize),
    Failed { t: f64, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    /// First crossing of each event function, if any.
    pub events: Vec<Option<EventHit>>,
    pub status: OdeStatus,
}

/// Integrate from `t0` to `t1`, recording the first sign change of every
/// event function. With `stop_at_event` the run ends at the earliest one,
/// and the final stored point is the state at the event time.
pub fn ode_evolve<F, G>(
    rhs: F,
    y0: Vec<f64>,
    t0: f64,
    t1: f64,
    opts: OdeOptions,
    events: &mut [G],
    stop_at_event: bool,
) -> OdeSolution
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
    G: FnMut(f64, &[f64]) -> Result<f64>,
{
    let mut sol = OdeSolution {
        ts: vec![t0],
        ys: vec![y0.clone()],
        events: vec![None; events.len()],
        status: OdeStatus::Completed,
    };
    let fail = |sol: &mut OdeSolution, t: f64, e: Error| {
        sol.status = OdeStatus::Failed { t, reason: e.to_string() };
    };
    let mut stepper = match Dopri5::new(rhs, t0, y0.clone(), t1, opts) {
        Ok(s) => s,
        Err(e) => {
            fail(&mut sol, t0, e);
            return sol;
        }
    };
    let mut g_prev = Vec::with_capacity(events.len());
    for g in events.iter_mut() {
        match g(t0, &y0) {
            Ok(v) => g_prev.push(v),
            Err(e) => {
                fail(&mut sol, t0, e);
                return sol;
            }
        }
    }
    let mut steps = 0;
    while (t1 - stepper.t) * (t1 - t0).signum() > 0.0 {
        if steps >= opts.max_steps {
            fail(&mut sol, stepper.t, Error::Integration { t: stepper.t, reason: "too many steps".into() });
            return sol;
        }
        steps += 1;
        let step = match stepper.step(t1) {
            Ok(s) => s,
            Err(e) => {
                fail(&mut sol, stepper.t, e);
                return sol;
            }
        };
        let mut earliest: Option<EventHit> = None;
        for (i, g) in events.iter_mut().enumerate() {
            let now = match g(step.t1, &step.y1) {
                Ok(v) => v,
                Err(e) => {
                    fail(&mut sol, step.t1, e);
                    return sol;
                }
            };
            if sol.events[i].is_none() && g_prev[i] != 0.0 && (now == 0.0 || (now > 0.0) != (g_prev[i] > 0.0)) {
                match localize_event(&step, g, g_prev[i], opts.event_tol) {
                    Ok((t, bracket)) => {
                        let hit = EventHit { index: i, t, bracket };
                        sol.events[i] = Some(hit);
                        let sooner = earliest.is_none_or(|e| (t - e.t) * (t1 - t0).signum() < 0.0);
                        if sooner {
                            earliest = Some(hit);
                        }
                    }
                    Err(e) => {
                        fail(&mut sol, step.t1, e);
                        return sol;
                    }
                }
            }
            g_prev[i] = now;
        }
        if stop_at_event {
            if let Some(hit) = earliest {
                sol.ts.push(hit.t);
                sol.ys.push(step.eval(hit.t));
                sol.status = OdeStatus::Event(hit.index);
                return sol;
            }
        }
        sol.ts.push(step.t1);
        sol.ys.push(step.y1.clone());
    }
    sol
}
