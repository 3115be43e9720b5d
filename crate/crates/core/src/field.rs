//! The external field `phi(x) = log|x - z1| + gamma log|x - z2|`, its critical
//! points and the window of masses `gamma` for which it has two minima.
//!
//! Critical points are the zeros of the cubic `P = u + gamma v` with
//! `u = (x + 1) D2(x)` and `v = (x - 1) D1(x)`, since `phi' = P / D`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{complex_roots, poly_eval, real_roots};
use crate::region::{self, Region};
use crate::types::ChargeConfig;

pub fn phi(cfg: &ChargeConfig, x: f64) -> f64 {
    0.5 * cfg.d1(x).ln() + 0.5 * cfg.gamma() * cfg.d2(x).ln()
}

pub fn phi_prime(cfg: &ChargeConfig, x: f64) -> f64 {
    (x + 1.0) / cfg.d1(x) + cfg.gamma() * (x - 1.0) / cfg.d2(x)
}

pub fn phi_second(cfg: &ChargeConfig, x: f64) -> f64 {
    let (d1, d2) = (cfg.d1(x), cfg.d2(x));
    let (b1, b2) = (cfg.beta1(), cfg.beta2());
    (b1 * b1 - (x + 1.0).powi(2)) / (d1 * d1) + cfg.gamma() * (b2 * b2 - (x - 1.0).powi(2)) / (d2 * d2)
}

/// `u(x) = (x + 1)((x - 1)^2 + beta2^2)`, ascending coefficients.
pub fn u_coeffs(beta2: f64) -> [f64; 4] {
    let s = beta2 * beta2;
    [1.0 + s, s - 1.0, -1.0, 1.0]
}

/// `v(x) = (x - 1)((x + 1)^2 + beta1^2)`, ascending coefficients.
pub fn v_coeffs(beta1: f64) -> [f64; 4] {
    let s = beta1 * beta1;
    [-(1.0 + s), s - 1.0, 1.0, 1.0]
}

/// Ascending coefficients of `P = u + gamma v`; leading coefficient `1 + gamma`.
pub fn critical_cubic(cfg: &ChargeConfig) -> [f64; 4] {
    let u = u_coeffs(cfg.beta2());
    let v = v_coeffs(cfg.beta1());
    let g = cfg.gamma();
    [u[0] + g * v[0], u[1] + g * v[1], u[2] + g * v[2], u[3] + g * v[3]]
}

/// `P'(x)`, whose sign at a simple critical point equals that of `phi''`.
pub fn critical_cubic_derivative(cfg: &ChargeConfig, x: f64) -> f64 {
    let p = critical_cubic(cfg);
    p[1] + 2.0 * p[2] * x + 3.0 * p[3] * x * x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    pub minima: Vec<f64>,
    pub maxima: Vec<f64>,
    /// Double zeros of `P` (inflection points with horizontal tangent).
    pub degenerate: Vec<f64>,
    /// The non-real zero of `P` in the upper half-plane, if `P` has one.
    pub complex_pair: Option<Complex64>,
    pub minima_values: Vec<f64>,
    pub maxima_values: Vec<f64>,
}

impl CriticalPoints {
    pub fn complex_pair_present(&self) -> bool {
        self.complex_pair.is_some()
    }

    /// Minima attaining the smallest value of `phi`, up to `tol`.
    pub fn global_minima(&self, tol: f64) -> Vec<f64> {
        let best = self.minima_values.iter().copied().fold(f64::INFINITY, f64::min);
        self.minima
            .iter()
            .zip(&self.minima_values)
            .filter(|(_, &v)| v - best <= tol)
            .map(|(&x, _)| x)
            .collect()
    }

    pub fn real_count(&self) -> usize {
        self.minima.len() + self.maxima.len() + self.degenerate.len()
    }
}

pub fn classify_critical_points(cfg: &ChargeConfig) -> Result<CriticalPoints> {
    let p = critical_cubic(cfg);
    let roots = real_roots(&p)?;
    let mut cp = CriticalPoints {
        minima: Vec::new(),
        maxima: Vec::new(),
        degenerate: Vec::new(),
        complex_pair: None,
        minima_values: Vec::new(),
        maxima_values: Vec::new(),
    };
    for r in &roots {
        if r.multiplicity > 1 {
            cp.degenerate.push(r.value);
            continue;
        }
        let slope = critical_cubic_derivative(cfg, r.value);
        if slope > 0.0 {
            cp.minima.push(r.value);
            cp.minima_values.push(phi(cfg, r.value));
        } else {
            cp.maxima.push(r.value);
            cp.maxima_values.push(phi(cfg, r.value));
        }
    }
    if roots.len() == 1 && roots[0].multiplicity == 1 {
        cp.complex_pair = complex_roots(&p)?
            .into_iter()
            .filter(|z| z.im.abs() > 0.0)
            .max_by(|a, b| a.im.total_cmp(&b.im))
            .map(|z| Complex64::new(z.re, z.im.abs()));
    }
    Ok(cp)
}

/// Masses at which `phi` has a double critical point in `(-1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaTildeWindow {
    pub gamma_tilde_1: f64,
    pub gamma_tilde_2: f64,
    /// Location of the double critical point at each end of the window.
    pub double_point_1: f64,
    pub double_point_2: f64,
}

impl GammaTildeWindow {
    pub fn contains(&self, gamma: f64) -> bool {
        gamma > self.gamma_tilde_1 && gamma < self.gamma_tilde_2
    }

    pub fn is_degenerate(&self) -> bool {
        self.gamma_tilde_1 == self.gamma_tilde_2
    }
}

fn mul3(a: &[f64; 4], b: &[f64; 3]) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `W = u'v - uv'`; its degree-five part cancels.
pub fn wronskian(beta1: f64, beta2: f64) -> [f64; 5] {
    let u = u_coeffs(beta2);
    let v = v_coeffs(beta1);
    let du = [u[1], 2.0 * u[2], 3.0 * u[3]];
    let dv = [v[1], 2.0 * v[2], 3.0 * v[3]];
    let a = mul3(&v, &du);
    let b = mul3(&u, &dv);
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3], a[4] - b[4]]
}

/// The window `(Gamma~1, Gamma~2)` of masses for which `phi` has two minima.
///
/// Absent outside `Omega0`; degenerate (both ends equal) on the curve.
pub fn gamma_tilde_window(beta1: f64, beta2: f64) -> Result<Option<GammaTildeWindow>> {
    let class = region::classify(beta1, beta2)?;
    let w = wronskian(beta1, beta2);
    let u = u_coeffs(beta2);
    let v = v_coeffs(beta1);
    let mut candidates: Vec<(f64, f64, usize)> = Vec::new();
    for r in real_roots(&w)? {
        let x = r.value;
        if !(x > -1.0 && x < 1.0) {
            continue;
        }
        let g = -poly_eval(&u, x) / poly_eval(&v, x);
        if g > 0.0 && g.is_finite() {
            candidates.push((g, x, r.multiplicity));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let window = match candidates.as_slice() {
        [] => None,
        [(g, x, m)] if *m > 1 => {
            Some(GammaTildeWindow { gamma_tilde_1: *g, gamma_tilde_2: *g, double_point_1: *x, double_point_2: *x })
        }
        [(g1, x1, _), (g2, x2, _)] => {
            Some(GammaTildeWindow { gamma_tilde_1: *g1, gamma_tilde_2: *g2, double_point_1: *x1, double_point_2: *x2 })
        }
        other => {
            return Err(Error::inconsistent(format!(
                "{} double critical points for heights ({beta1}, {beta2})",
                other.len()
            )))
        }
    };
    match (class.region, &window) {
        (Region::Omega0, Some(_)) | (Region::OmegaInf, None) => Ok(window),
        (Region::OnCurve, _) => Ok(window.map(|w| {
            let g = 0.5 * (w.gamma_tilde_1 + w.gamma_tilde_2);
            let x = 0.5 * (w.double_point_1 + w.double_point_2);
            GammaTildeWindow { gamma_tilde_1: g, gamma_tilde_2: g, double_point_1: x, double_point_2: x }
        })),
        (Region::OmegaInf, Some(w)) if w.is_degenerate() => Ok(None),
        (region, _) => Err(Error::inconsistent(format!(
            "heights ({beta1}, {beta2}) lie in {region} (f = {:e}) but the double critical point count disagrees",
            class.value
        ))),
    }
}

/// `phi(left minimum) - phi(right minimum)`, when there are two minima.
pub fn minima_difference(cfg: &ChargeConfig) -> Result<Option<f64>> {
    let cp = classify_critical_points(cfg)?;
    Ok(match cp.minima_values.as_slice() {
        [l, r] => Some(l - r),
        _ => None,
    })
}

/// The mass ratio inside the two-minima window at which both minima of
/// `phi` have the same value.
pub fn equal_minima_gamma(beta1: f64, beta2: f64) -> Result<Option<f64>> {
    let Some(w) = gamma_tilde_window(beta1, beta2)? else {
        return Ok(None);
    };
    if w.is_degenerate() {
        return Ok(None);
    }
    let diff = |g: f64| -> Result<Option<f64>> { minima_difference(&ChargeConfig::new(beta1, beta2, g)?) };
    let width = w.gamma_tilde_2 - w.gamma_tilde_1;
    let mut shrink = 1e-9;
    let (mut lo, mut hi, mut dlo) = loop {
        let lo = w.gamma_tilde_1 + shrink * width;
        let hi = w.gamma_tilde_2 - shrink * width;
        if let (Some(a), Some(b)) = (diff(lo)?, diff(hi)?) {
            if (a > 0.0) != (b > 0.0) {
                break (lo, hi, a);
            }
        }
        shrink *= 10.0;
        if shrink > 0.1 {
            return Err(Error::inconsistent("minima difference does not change sign across the window"));
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = diff(mid)?.ok_or_else(|| Error::inconsistent("lost a minimum inside the window"))?;
        if d == 0.0 {
            return Ok(Some(mid));
        }
        if (d > 0.0) == (dlo > 0.0) {
            lo = mid;
            dlo = d;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
