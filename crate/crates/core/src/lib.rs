//! Equilibrium measures on the real line in the field of two attracting
//! charges `z1 = -1 + i beta1` and `z2 = 1 + i beta2` with masses `1` and
//! `gamma`.
//!
//! The measure of mass `t` is encoded by the zeros of two polynomials: `A`,
//! whose roots are the endpoints of the support, and `B`, whose roots are the
//! remaining zeros of the density. [`solver`] computes them at fixed `t`,
//! [`dynamics`] follows them in `t` and detects phase transitions, [`field`]
//! and [`region`] describe the field and the height parameter plane, and
//! [`criticality`] traces the manifold of double zeros of `B`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criticality;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod measure;
pub mod numerics;
pub mod region;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    BZeros, ChargeConfig, Phase, PhaseDiagram, Scenario, SupportState, TransitionEvent,
    TransitionKind,
};


pub use criticality::{find_gamma_interval, mediatrix_geometry, DoubleRootState, GammaInterval, MediatrixGeometry};
pub use dynamics::{evolve, limit_b_zeros, limit_density, phase_diagram, EvolveOptions, Trajectory};
pub use field::{classify_critical_points, gamma_tilde_window, CriticalPoints, GammaTildeWindow};
pub use measure::{density, total_potential};
pub use region::{classify, f_boundary, Region, RegionClass};
pub use solver::{solve_onecut, solve_twocut, SolverOptions};
