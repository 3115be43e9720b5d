//! Density, mass and logarithmic potential of an equilibrium measure given by
//! its support state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::phi;
use crate::numerics::{tanh_sinh_quad_offsets, QuadOptions, QuadResult};
use crate::types::{ChargeConfig, SupportState};

/// Default relative accuracy of the quadratures in this module.
pub const DEFAULT_QUAD_TOL: f64 = 1e-11;

/// Points where `D` varies fastest; quadratures restart there.
pub fn field_breakpoints(cfg: &ChargeConfig) -> [f64; 6] {
    [
        -1.0 - cfg.beta1(),
        -1.0,
        -1.0 + cfg.beta1(),
        1.0 - cfg.beta2(),
        1.0,
        1.0 + cfg.beta2(),
    ]
}

/// Density formula without the support check; `A` and `B` enter through their
/// absolute values.
pub fn density_raw(cfg: &ChargeConfig, s: &SupportState, x: f64) -> f64 {
    let total = cfg.total_mass();
    let b = s.b_poly(x).abs();
    let a = s.a_poly(x).abs();
    (total - s.t()) / std::f64::consts::PI * b * a.sqrt() / cfg.d(x)
}

/// `(T - t)/pi |B(x)| sqrt|A(x)| / D(x)` for `x` in the support.
pub fn density(cfg: &ChargeConfig, s: &SupportState, x: f64) -> Result<f64> {
    if !s.contains(x) {
        return Err(Error::OutsideSupport { x });
    }
    if s.endpoints().contains(&x) {
        return Ok(0.0);
    }
    Ok(density_raw(cfg, s, x))
}

fn pieces(cfg: &ChargeConfig, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut knots = vec![lo];
    knots.extend(field_breakpoints(cfg).iter().chain(extra).copied().filter(|&p| p > lo && p < hi));
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

fn add(acc: &mut Option<QuadResult>, r: QuadResult) {
    *acc = Some(match acc.take() {
        None => r,
        Some(a) => QuadResult {
            value: a.value + r.value,
            error_estimate: a.error_estimate + r.error_estimate,
            levels_used: a.levels_used.max(r.levels_used),
            converged: a.converged && r.converged,
            abs_integral: a.abs_integral + r.abs_integral,
        },
    });
}

/// Integral of `g(y) * density(y)` over the support, where `g` receives
/// `(y, offset from the piece's left end, offset from its right end)` and the
/// pieces are split at `splits` as well as the field breakpoints.
pub fn integrate_against<G>(cfg: &ChargeConfig, s: &SupportState, splits: &[f64], opts: QuadOptions, mut g: G) -> QuadResult
where
    G: FnMut(f64, f64, f64, (f64, f64)) -> f64,
{
    let mut acc = None;
    for (lo, hi) in s.cuts() {
        let knots = pieces(cfg, lo, hi, splits);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let r = tanh_sinh_quad_offsets(
                |y, dl, dr| {
                    if y <= lo || y >= hi {
                        return 0.0;
                    }
                    g(y, dl, dr, (a, b)) * density_raw(cfg, s, y)
                },
                a,
                b,
                opts,
            );
            add(&mut acc, r);
        }
    }
    acc.expect("support has at least one cut")
}

pub fn mass(cfg: &ChargeConfig, s: &SupportState, tol: f64) -> QuadResult {
    integrate_against(cfg, s, &[], QuadOptions::with_tol(tol), |_, _, _, _| 1.0)
}

/// `V(x) = -int log|x - y| dlambda(y)`.
pub fn log_potential(cfg: &ChargeConfig, s: &SupportState, x: f64, tol: f64) -> QuadResult {
    let inside = s.contains(x);
    let splits: &[f64] = if inside { &[x] } else { &[] };
    integrate_against(cfg, s, splits, QuadOptions::with_tol(tol), |y, dl, dr, (a, b)| {
        // the offsets give |x - y| exactly next to the split point
        let dist = if inside && b == x {
            dr
        } else if inside && a == x {
            dl
        } else {
            (x - y).abs()
        };
        -dist.ln()
    })
}

/// Total potential `V(x) + phi(x)`; constant on the support at equilibrium.
pub fn total_potential(cfg: &ChargeConfig, s: &SupportState, x: f64) -> Result<f64> {
    total_potential_with_tol(cfg, s, x, DEFAULT_QUAD_TOL)
}

pub fn total_potential_with_tol(cfg: &ChargeConfig, s: &SupportState, x: f64, tol: f64) -> Result<f64> {
    let v = log_potential(cfg, s, x, tol).into_result()?;
    Ok(v + phi(cfg, x))
}

/// The equilibrium constant, evaluated at the midpoint of the first cut.
pub fn equilibrium_constant(cfg: &ChargeConfig, s: &SupportState) -> Result<f64> {
    let (lo, hi) = s.cuts()[0];
    total_potential(cfg, s, 0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumAudit {
    pub equilibrium_constant: f64,
    /// Largest `|U(x) - c| / max(1, |c|)` over the support samples.
    pub max_deviation_on_support: f64,
    /// Smallest `U(x) - c` over the off-support samples.
    pub min_excess_off_support: f64,
    pub mass: f64,
    pub mass_error: f64,
    pub support_samples: usize,
    pub off_support_samples: usize,
}

impl EquilibriumAudit {
    pub fn passes(&self, deviation_tol: f64, mass_tol: f64) -> bool {
        self.max_deviation_on_support < deviation_tol
            && self.min_excess_off_support > -deviation_tol * self.equilibrium_constant.abs().max(1.0)
            && self.mass_error <= mass_tol * self.mass.abs().max(f64::MIN_POSITIVE)
    }
}

/// Off-support sample points: inside each gap and on both sides of the support.
pub fn off_support_samples(s: &SupportState, n: usize) -> Vec<f64> {
    let e = s.endpoints();
    let (lo, hi) = (e[0], e[e.len() - 1]);
    let width = hi - lo;
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    if let SupportState::TwoCut { a, .. } = s {
        gaps.push((a[1], a[2]));
    }
    let mut pts = Vec::with_capacity(n);
    let n_gap = if gaps.is_empty() { 0 } else { n / 3 };
    for &(g0, g1) in &gaps {
        for k in 0..n_gap {
            pts.push(g0 + (g1 - g0) * (k as f64 + 0.5) / n_gap as f64);
        }
    }
    let rest = n - pts.len();
    for k in 0..rest {
        let frac = (k / 2) as f64 / ((rest / 2).max(1)) as f64;
        // geometric spacing out to several support widths
        let off = width * (1e-3 * (4e3f64).powf(frac));
        pts.push(if k % 2 == 0 { lo - off } else { hi + off });
    }
    pts
}

/// Check the equilibrium conditions by sampling.
pub fn audit_equilibrium(cfg: &ChargeConfig, s: &SupportState, n_support: usize, n_off: usize) -> Result<EquilibriumAudit> {
    let c = equilibrium_constant(cfg, s)?;
    let scale = c.abs().max(1.0);
    let cuts = s.cuts();
    let per_cut = (n_support / cuts.len()).max(1);
    let mut dev = 0.0f64;
    let mut count = 0;
    for &(lo, hi) in &cuts {
        for k in 0..per_cut {
            let x = lo + (hi - lo) * (k as f64 + 0.5) / per_cut as f64;
            dev = dev.max((total_potential(cfg, s, x)? - c).abs() / scale);
            count += 1;
        }
    }
    let off = off_support_samples(s, n_off);
    let mut excess = f64::INFINITY;
    for &x in &off {
        excess = excess.min(total_potential(cfg, s, x)? - c);
    }
    let m = mass(cfg, s, 1e-12).into_result()?;
    Ok(EquilibriumAudit {
        equilibrium_constant: c,
        max_deviation_on_support: dev,
        min_excess_off_support: excess,
        mass: m,
        mass_error: (m - s.t()).abs(),
        support_samples: count,
        off_support_samples: off.len(),
    })
}
