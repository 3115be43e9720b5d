//! Flat CSV rows.

use eqfield_core::dynamics::zeta;
use eqfield_core::measure::mass;
use eqfield_core::{BZeros, ChargeConfig, SupportState};
use serde::Serialize;

/// One trajectory row; absent quantities are written as empty fields.
#[derive(Debug, Serialize)]
pub struct StateRow {
    pub t: f64,
    pub phase: &'static str,
    pub a1: f64,
    pub a2: f64,
    pub a3: Option<f64>,
    pub a4: Option<f64>,
    pub b_re: f64,
    pub b_im: f64,
    pub b2: Option<f64>,
    pub zeta: Option<f64>,
    pub mass_err: Option<f64>,
}

impl StateRow {
    pub fn new(cfg: &ChargeConfig, s: &SupportState, quad_tol: f64) -> Self {
        let mass_err = mass(cfg, s, quad_tol).into_result().ok().map(|m| m - s.t());
        match *s {
            SupportState::OneCut { t, a1, a2, b } => {
                let (b_re, b_im, b2) = match b {
                    BZeros::RealPair { lo, hi } => (lo, 0.0, Some(hi)),
                    BZeros::ConjugatePair { re, im } => (re, im, None),
                };
                StateRow { t, phase: "one-cut", a1, a2, a3: None, a4: None, b_re, b_im, b2, zeta: None, mass_err }
            }
            SupportState::TwoCut { t, a, b1 } => StateRow {
                t,
                phase: "two-cut",
                a1: a[0],
                a2: a[1],
                a3: Some(a[2]),
                a4: Some(a[3]),
                b_re: b1,
                b_im: 0.0,
                b2: None,
                zeta: zeta(&a).ok().map(|z| z.zeta),
                mass_err,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SampleRow {
    pub x: f64,
    pub density: f64,
}

#[derive(Debug, Serialize)]
pub struct CurveRow {
    pub beta1: f64,
    pub beta2: f64,
}

#[derive(Debug, Serialize)]
pub struct SectionRow {
    pub beta1: f64,
    pub beta2: f64,
    pub region: String,
    pub gamma_1: Option<f64>,
    pub gamma_tilde_1: Option<f64>,
    pub gamma_tilde_2: Option<f64>,
    pub gamma_2: Option<f64>,
}
