//! Domain types shared across the crate.
//!
//! All of these are plain immutable values: constructing one validates it, and
//! nothing in the crate mutates them afterwards.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the external field `log|x - z1| + gamma log|x - z2|` with
/// `z1 = -1 + i beta1` and `z2 = 1 + i beta2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChargeConfig")]
pub struct ChargeConfig {
    beta1: f64,
    beta2: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawChargeConfig {
    beta1: f64,
    beta2: f64,
    gamma: f64,
}

impl TryFrom<RawChargeConfig> for ChargeConfig {
    type Error = Error;

    fn try_from(raw: RawChargeConfig) -> Result<Self> {
        ChargeConfig::new(raw.beta1, raw.beta2, raw.gamma)
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be a positive finite number, got {value}")))
    }
}

impl ChargeConfig {
    pub fn new(beta1: f64, beta2: f64, gamma: f64) -> Result<Self> {
        check_positive("beta1", beta1)?;
        check_positive("beta2", beta2)?;
        check_positive("gamma", gamma)?;
        Ok(Self { beta1, beta2, gamma })
    }

    /// Totally symmetric configuration: equal heights and unit mass ratio.
    pub fn symmetric(beta: f64) -> Result<Self> {
        Self::new(beta, beta, 1.0)
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn z1(&self) -> Complex64 {
        Complex64::new(-1.0, self.beta1)
    }

    pub fn z2(&self) -> Complex64 {
        Complex64::new(1.0, self.beta2)
    }

    /// Total mass `T = 1 + gamma`; equilibrium measures exist for `0 < t < T`.
    pub fn total_mass(&self) -> f64 {
        1.0 + self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.beta1, self.beta2, gamma)
    }

    /// Image under `x -> -x`: heights swap and the mass ratio inverts. Masses
    /// scale by `1/gamma`, so a state at mass `t` maps to one at `t / gamma`.
    pub fn reflected(&self) -> Self {
        Self { beta1: self.beta2, beta2: self.beta1, gamma: 1.0 / self.gamma }
    }

    /// `D1(x) = (x + 1)^2 + beta1^2`.
    pub fn d1(&self, x: f64) -> f64 {
        let u = x + 1.0;
        u * u + self.beta1 * self.beta1
    }

    /// `D2(x) = (x - 1)^2 + beta2^2`.
    pub fn d2(&self, x: f64) -> f64 {
        let u = x - 1.0;
        u * u + self.beta2 * self.beta2
    }

    /// `D(x) = D1(x) D2(x)` in factored form; strictly positive on the real line.
    pub fn d(&self, x: f64) -> f64 {
        self.d1(x) * self.d2(x)
    }

    pub fn d1_complex(&self, z: Complex64) -> Complex64 {
        let u = z + 1.0;
        u * u + self.beta1 * self.beta1
    }

    pub fn d2_complex(&self, z: Complex64) -> Complex64 {
        let u = z - 1.0;
        u * u + self.beta2 * self.beta2
    }

    pub fn d_complex(&self, z: Complex64) -> Complex64 {
        self.d1_complex(z) * self.d2_complex(z)
    }

    pub(crate) fn check_mass(&self, t: f64) -> Result<()> {
        if t.is_finite() && t > 0.0 && t < self.total_mass() {
            Ok(())
        } else {
            Err(Error::invalid(format!("mass t = {t} must lie in (0, {})", self.total_mass())))
        }
    }
}

impl fmt::Display for ChargeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(beta1 = {}, beta2 = {}, gamma = {})", self.beta1, self.beta2, self.gamma)
    }
}

/// The two zeros of `B` in a one-cut state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BZeros {
    /// Two real zeros `lo <= hi` on the same side of the support.
    RealPair { lo: f64, hi: f64 },
    /// `re + i im` and its conjugate, `im > 0`.
    ConjugatePair { re: f64, im: f64 },
}

impl BZeros {
    /// From the coefficients of `B(z) = z^2 - sum z + product`.
    pub fn from_sum_product(sum: f64, product: f64) -> Self {
        let disc = sum * sum - 4.0 * product;
        if disc >= 0.0 {
            let root = disc.sqrt();
            // stable quadratic roots
            let big = 0.5 * (sum + sum.signum() * root);
            let (r1, r2) = if big != 0.0 { (big, product / big) } else { (0.0, 0.0) };
            BZeros::RealPair { lo: r1.min(r2), hi: r1.max(r2) }
        } else {
            BZeros::ConjugatePair { re: 0.5 * sum, im: 0.5 * (-disc).sqrt() }
        }
    }

    pub fn sum(&self) -> f64 {
        match *self {
            BZeros::RealPair { lo, hi } => lo + hi,
            BZeros::ConjugatePair { re, .. } => 2.0 * re,
        }
    }

    pub fn product(&self) -> f64 {
        match *self {
            BZeros::RealPair { lo, hi } => lo * hi,
            BZeros::ConjugatePair { re, im } => re * re + im * im,
        }
    }

    /// The zeros as complex numbers; for a conjugate pair the first one has
    /// positive imaginary part.
    pub fn as_complex(&self) -> [Complex64; 2] {
        match *self {
            BZeros::RealPair { lo, hi } => [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)],
            BZeros::ConjugatePair { re, im } => [Complex64::new(re, im), Complex64::new(re, -im)],
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self, BZeros::RealPair { .. })
    }
}

/// Snapshot of the equilibrium measure at mass `t` through the zeros of the
/// polynomials `A` (support endpoints) and `B` (remaining density zeros).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum SupportState {
    OneCut { t: f64, a1: f64, a2: f64, b: BZeros },
    TwoCut { t: f64, a: [f64; 4], b1: f64 },
}

impl SupportState {
    pub fn one_cut(t: f64, a1: f64, a2: f64, b: BZeros) -> Result<Self> {
        let s = SupportState::OneCut { t, a1, a2, b };
        s.validate()?;
        Ok(s)
    }

    pub fn two_cut(t: f64, a: [f64; 4], b1: f64) -> Result<Self> {
        let s = SupportState::TwoCut { t, a, b1 };
        s.validate()?;
        Ok(s)
    }

    /// Structural invariants: ordering of endpoints and placement of the zeros
    /// of `B`. Density positivity is checked separately in [`crate::measure`].
    pub fn validate(&self) -> Result<()> {
        if !self.parameters().iter().all(|v| v.is_finite()) {
            return Err(Error::state("non-finite entry"));
        }
        if self.t() <= 0.0 {
            return Err(Error::state(format!("mass t = {} must be positive", self.t())));
        }
        match *self {
            SupportState::OneCut { a1, a2, b, .. } => {
                if a1 >= a2 {
                    return Err(Error::state(format!("endpoints out of order: {a1} >= {a2}")));
                }
                match b {
                    BZeros::RealPair { lo, hi } => {
                        let inside = |x: f64| x > a1 && x < a2;
                        if lo > hi || inside(lo) || inside(hi) {
                            return Err(Error::state(format!(
                                "real B zeros ({lo}, {hi}) must lie outside ({a1}, {a2})"
                            )));
                        }
                        if (lo < a1) != (hi < a1) {
                            return Err(Error::state("real B zeros straddle the support"));
                        }
                    }
                    BZeros::ConjugatePair { im, .. } => {
                        if im <= 0.0 {
                            return Err(Error::state("conjugate pair needs im > 0"));
                        }
                    }
                }
            }
            SupportState::TwoCut { a, b1, .. } => {
                if !(a[0] < a[1] && a[1] < a[2] && a[2] < a[3]) {
                    return Err(Error::state(format!("endpoints out of order: {a:?}")));
                }
                if !(b1 > a[1] && b1 < a[2]) {
                    return Err(Error::state(format!("b1 = {b1} must lie in the gap ({}, {})", a[1], a[2])));
                }
            }
        }
        Ok(())
    }

    pub fn t(&self) -> f64 {
        match *self {
            SupportState::OneCut { t, .. } | SupportState::TwoCut { t, .. } => t,
        }
    }

    pub fn with_t(self, t: f64) -> Self {
        match self {
            SupportState::OneCut { a1, a2, b, .. } => SupportState::OneCut { t, a1, a2, b },
            SupportState::TwoCut { a, b1, .. } => SupportState::TwoCut { t, a, b1 },
        }
    }

    pub fn cut_count(&self) -> usize {
        match self {
            SupportState::OneCut { .. } => 1,
            SupportState::TwoCut { .. } => 2,
        }
    }

    pub fn endpoints(&self) -> Vec<f64> {
        match *self {
            SupportState::OneCut { a1, a2, .. } => vec![a1, a2],
            SupportState::TwoCut { a, .. } => a.to_vec(),
        }
    }

    pub fn cuts(&self) -> Vec<(f64, f64)> {
        match *self {
            SupportState::OneCut { a1, a2, .. } => vec![(a1, a2)],
            SupportState::TwoCut { a, .. } => vec![(a[0], a[1]), (a[2], a[3])],
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.cuts().iter().any(|&(lo, hi)| x >= lo && x <= hi)
    }

    /// Zeros of `B` as complex numbers.
    pub fn b_zeros(&self) -> Vec<Complex64> {
        match *self {
            SupportState::OneCut { b, .. } => b.as_complex().to_vec(),
            SupportState::TwoCut { b1, .. } => vec![Complex64::new(b1, 0.0)],
        }
    }

    /// `A(x) = prod (x - a_i)` on the real line.
    pub fn a_poly(&self, x: f64) -> f64 {
        self.endpoints().iter().map(|&a| x - a).product()
    }

    pub fn a_poly_complex(&self, z: Complex64) -> Complex64 {
        self.endpoints().iter().map(|&a| z - a).product()
    }

    /// `B(x)` on the real line.
    pub fn b_poly(&self, x: f64) -> f64 {
        match *self {
            SupportState::OneCut { b, .. } => x * x - b.sum() * x + b.product(),
            SupportState::TwoCut { b1, .. } => x - b1,
        }
    }

    pub fn b_poly_complex(&self, z: Complex64) -> Complex64 {
        match *self {
            SupportState::OneCut { b, .. } => z * z - z * b.sum() + b.product(),
            SupportState::TwoCut { b1, .. } => z - b1,
        }
    }

    /// Flat parameter list: endpoints followed by the `B` data.
    pub fn parameters(&self) -> Vec<f64> {
        match *self {
            SupportState::OneCut { a1, a2, b, .. } => match b {
                BZeros::RealPair { lo, hi } => vec![a1, a2, lo, hi],
                BZeros::ConjugatePair { re, im } => vec![a1, a2, re, im],
            },
            SupportState::TwoCut { a, b1, .. } => vec![a[0], a[1], a[2], a[3], b1],
        }
    }

    /// Image under `x -> -x`, paired with [`ChargeConfig::reflected`].
    pub fn reflected(&self, gamma: f64) -> Self {
        let t = self.t() / gamma;
        match *self {
            SupportState::OneCut { a1, a2, b, .. } => {
                let b = match b {
                    BZeros::RealPair { lo, hi } => BZeros::RealPair { lo: -hi, hi: -lo },
                    BZeros::ConjugatePair { re, im } => BZeros::ConjugatePair { re: -re, im },
                };
                SupportState::OneCut { t, a1: -a2, a2: -a1, b }
            }
            SupportState::TwoCut { a, b1, .. } => {
                SupportState::TwoCut { t, a: [-a[3], -a[2], -a[1], -a[0]], b1: -b1 }
            }
        }
    }

    /// Largest absolute difference between the parameter vectors of two
    /// states of the same phase.
    pub fn distance(&self, other: &SupportState) -> Option<f64> {
        if self.cut_count() != other.cut_count() {
            return None;
        }
        let (p, q) = (self.parameters(), other.parameters());
        if let (SupportState::OneCut { b: b1, .. }, SupportState::OneCut { b: b2, .. }) = (self, other) {
            if b1.is_real() != b2.is_real() {
                // compare through the coefficients of B instead
                let d = (b1.sum() - b2.sum()).abs().max((b1.product() - b2.product()).abs());
                let e = (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
                return Some(d.max(e));
            }
        }
        Some(p.iter().zip(&q).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionKind {
    /// Birth of a cut from a real zero of `B` outside the support.
    TypeI,
    /// Fusion of two cuts.
    TypeII,
    /// A conjugate pair of `B` zeros meets an endpoint.
    TypeIII,
    /// A conjugate pair of `B` zeros lands on the real axis.
    ExtremaBirth,
}

impl TransitionKind {
    /// Change in the number of cuts caused by the event.
    pub fn cut_delta(self) -> i32 {
        match self {
            TransitionKind::TypeI => 1,
            TransitionKind::TypeII => -1,
            TransitionKind::TypeIII | TransitionKind::ExtremaBirth => 0,
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TransitionKind::TypeI => "TypeI",
            TransitionKind::TypeII => "TypeII",
            TransitionKind::TypeIII => "TypeIII",
            TransitionKind::ExtremaBirth => "ExtremaBirth",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub kind: TransitionKind,
    /// Critical mass.
    pub t: f64,
    /// Real point where the event happens.
    pub location: f64,
}

/// Interval of masses with a fixed number of cuts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub cuts: usize,
    pub t_start: f64,
    pub t_end: f64,
}

/// Qualitative evolution classes for the two-charge field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Two minima of the field: one-cut, two-cut, one-cut.
    TwoMinima,
    /// Single minimum but a new local extremum appears first.
    ExtremaThenTwoCut,
    /// One-cut throughout, although the heights admit two-cut phases.
    OneCutInOmega0,
    /// One-cut throughout; heights outside the two-cut region.
    OneCutOutside,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub config: ChargeConfig,
    pub scenario: Scenario,
    pub initial_cuts: usize,
    pub events: Vec<TransitionEvent>,
    pub phases: Vec<Phase>,
    /// Mass of the extrema birth, if any.
    pub t0: Option<f64>,
    /// Mass at which the second cut appears; zero for a two-cut start.
    pub t1: Option<f64>,
    /// Mass of the fusion of the two cuts.
    pub t2: Option<f64>,
}

impl PhaseDiagram {
    /// Assemble phases from ordered events starting with `initial_cuts` cuts.
    pub fn from_events(
        config: ChargeConfig,
        scenario: Scenario,
        initial_cuts: usize,
        events: Vec<TransitionEvent>,
    ) -> Result<Self> {
        let total = config.total_mass();
        let mut phases = Vec::new();
        let mut cuts = initial_cuts as i32;
        let mut start = 0.0;
        let mut last_t = f64::NEG_INFINITY;
        for ev in &events {
            if !(ev.t >= 0.0 && ev.t < total) {
                return Err(Error::inconsistent(format!("event time {} outside [0, T)", ev.t)));
            }
            if ev.t <= last_t {
                return Err(Error::inconsistent("events are not strictly increasing in t"));
            }
            last_t = ev.t;
            let next = cuts + ev.kind.cut_delta();
            if !(1..=2).contains(&next) {
                return Err(Error::inconsistent(format!("{} leaves {next} cuts", ev.kind)));
            }
            if next != cuts {
                if ev.t > start {
                    phases.push(Phase { cuts: cuts as usize, t_start: start, t_end: ev.t });
                }
                start = ev.t;
                cuts = next;
            }
        }
        phases.push(Phase { cuts: cuts as usize, t_start: start, t_end: total });
        let first = |k: TransitionKind| events.iter().find(|e| e.kind == k).map(|e| e.t);
        let t0 = first(TransitionKind::ExtremaBirth);
        let t1 = if initial_cuts == 2 { Some(0.0) } else { first(TransitionKind::TypeI) };
        let t2 = first(TransitionKind::TypeII);
        Ok(Self { config, scenario, initial_cuts, events, phases, t0, t1, t2 })
    }

    pub fn kinds(&self) -> Vec<TransitionKind> {
        self.events.iter().map(|e| e.kind).collect()
    }
}
