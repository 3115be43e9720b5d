//! Failures and their exit codes.

use std::process::ExitCode;

use serde_json::json;

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or unreadable input: exit 2.
    Usage(String),
    /// A computation failed: exit 3, with a JSON diagnostic on stderr.
    Numerical(eqfield_core::Error),
    /// A check ran and did not pass: exit 3.
    Check(serde_json::Value),
}

pub type CliResult<T> = Result<T, Failure>;

impl From<eqfield_core::Error> for Failure {
    fn from(e: eqfield_core::Error) -> Self {
        match e {
            eqfield_core::Error::InvalidParameter(msg) => Failure::Usage(msg),
            other => Failure::Numerical(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn kind(e: &eqfield_core::Error) -> &'static str {
    use eqfield_core::Error::*;
    match e {
        InvalidParameter(_) => "invalid_parameter",
        InvalidState(_) => "invalid_state",
        OutsideSupport { .. } => "outside_support",
        Quadrature { .. } => "quadrature",
        ZeroPolynomial => "zero_polynomial",
        NotConverged(_) => "not_converged",
        Collision(_) => "collision",
        Integration { .. } => "integration",
        DegenerateMinimum { .. } => "degenerate_minimum",
        Inconsistent(_) => "inconsistent",
    }
}

impl Failure {
    pub fn report(self) -> ExitCode {
        match self {
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Failure::Numerical(e) => {
                let mut diag = json!({ "error": kind(&e), "message": e.to_string() });
                if let eqfield_core::Error::NotConverged(report) = &e {
                    diag["newton"] = serde_json::to_value(report).unwrap_or_default();
                }
                eprintln!("{diag}");
                ExitCode::from(3)
            }
            Failure::Check(diag) => {
                eprintln!("{diag}");
                ExitCode::from(3)
            }
        }
    }
}
