//! Numerical kernels: double-exponential quadrature, polynomial roots,
//! damped Newton iteration and a Dormand–Prince integrator with events.

mod newton;
mod ode;
mod quad;
mod roots;

pub use newton::{fd_jacobian, newton_solve, NewtonOptions, NewtonReport};
pub use ode::{
    localize_event, ode_evolve, DenseStep, Dopri5, EventHit, OdeOptions, OdeSolution, OdeStatus,
};
pub use quad::{
    tanh_sinh_quad, tanh_sinh_quad_offsets, tanh_sinh_split, QuadOptions, QuadResult,
};
pub use roots::{complex_roots, poly_eval, poly_eval_complex, real_roots, RealRoot, MULTIPLICITY_TOL};
