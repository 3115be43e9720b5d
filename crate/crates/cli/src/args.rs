//! Command-line arguments.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "eqfield", version, about = "Equilibrium measures in the field of two attracting charges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Output format; tabular commands default to CSV, the others only write JSON.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(flatten)]
    pub tol: Tolerances,
}

/// Overrides for the numerical tolerances; omitted flags keep the library defaults.
#[derive(Debug, Clone, Copy, Args)]
pub struct Tolerances {
    /// Newton convergence threshold on the max-norm of the residual.
    #[arg(long = "tol-newton", global = true)]
    pub newton: Option<f64>,
    /// Relative accuracy of the gap and validity quadratures.
    #[arg(long = "tol-quad", global = true)]
    pub quad: Option<f64>,
    /// Relative tolerance of the ODE integrator.
    #[arg(long = "tol-ode-rtol", global = true)]
    pub ode_rtol: Option<f64>,
    /// Absolute tolerance of the ODE integrator.
    #[arg(long = "tol-ode-atol", global = true)]
    pub ode_atol: Option<f64>,
    /// Width of the bracket in which event masses are localized.
    #[arg(long = "tol-event", global = true)]
    pub event: Option<f64>,
    /// Allowed relative deviation of the total potential in `verify`.
    #[arg(long = "tol-audit", global = true)]
    pub audit: Option<f64>,
    /// Allowed relative mass error in `verify`.
    #[arg(long = "tol-mass", global = true)]
    pub mass: Option<f64>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Heights {
    #[arg(long)]
    pub beta1: f64,
    #[arg(long)]
    pub beta2: f64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Charges {
    #[command(flatten)]
    pub heights: Heights,
    /// Mass of the right charge; the left one has mass 1.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Normalization {
    /// Total mass one.
    Unit,
    /// Total mass `1 + gamma`.
    Total,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Region of the height plane and the value of the boundary polynomial.
    Classify(Heights),
    /// The critical masses Gamma1, Gamma~1, Gamma~2, Gamma2.
    CriticalGammas(Heights),
    /// The equilibrium state at one mass, as JSON.
    Solve {
        #[command(flatten)]
        charges: Charges,
        #[arg(long)]
        t: f64,
    },
    /// Trajectory from small mass to `--t-stop` as CSV.
    Evolve {
        #[command(flatten)]
        charges: Charges,
        /// Defaults to 0.999 T.
        #[arg(long)]
        t_stop: Option<f64>,
        /// Keep every n-th integrator step.
        #[arg(long, default_value_t = 1)]
        every: usize,
        /// Also write the detected events as JSON to this file.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Transition events and phases, as JSON.
    PhaseDiagram {
        #[command(flatten)]
        charges: Charges,
    },
    /// Density sampled on the support at mass `t`, as CSV.
    Density {
        #[command(flatten)]
        charges: Charges,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Density of the limit measure as the mass approaches T, as CSV.
    LimitDensity {
        #[command(flatten)]
        charges: Charges,
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, default_value_t = 401)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Normalization::Unit)]
        normalization: Normalization,
    },
    /// The boundary curve between the two height regions, as CSV.
    RegionCurve {
        #[arg(long = "from")]
        from: f64,
        #[arg(long = "to")]
        to: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Critical masses along a line of the height plane, as CSV.
    #[command(group(ArgGroup::new("section").required(true).args(["beta1", "beta2", "diagonal"])))]
    BodySection {
        /// Fix beta1 and sweep beta2.
        #[arg(long)]
        beta1: Option<f64>,
        /// Fix beta2 and sweep beta1.
        #[arg(long)]
        beta2: Option<f64>,
        /// Sweep beta1 = beta2.
        #[arg(long)]
        diagonal: bool,
        #[arg(long = "from")]
        from: f64,
        #[arg(long = "to")]
        to: f64,
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Audit the equilibrium conditions of a state file written by `solve`.
    Verify {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 50)]
        n_support: usize,
        #[arg(long, default_value_t = 50)]
        n_off: usize,
    },
}
