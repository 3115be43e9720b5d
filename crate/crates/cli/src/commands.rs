//! Subcommand implementations.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use eqfield_core::dynamics::{default_t_stop, evolve_from_start, phase_diagram_with, state_at, LimitMeasure, LimitNormalization};
use eqfield_core::field::equal_minima_gamma;
use eqfield_core::measure::audit_equilibrium;
use eqfield_core::region::curve_point;
use eqfield_core::solver::residuals;
use eqfield_core::{
    classify, density, find_gamma_interval, gamma_tilde_window, ChargeConfig, EvolveOptions, Region, SupportState,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{Charges, Command, Format, Heights, Normalization, Tolerances};
use crate::failure::{CliResult, Failure};
use crate::rows::{CurveRow, SampleRow, SectionRow, StateRow};

/// A solved state together with its charges; written by `solve`, read by `verify`.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub config: ChargeConfig,
    pub state: SupportState,
    #[serde(default)]
    pub residual_norm: Option<f64>,
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Destination and format of the main result.
pub struct Output {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Output {
    fn json(&self, value: &impl Serialize) -> CliResult<()> {
        if self.format == Some(Format::Csv) {
            return Err(Failure::Usage("this command writes JSON only".into()));
        }
        write_json(self.path.as_deref(), value)
    }

    fn table<R: Serialize>(&self, rows: impl IntoIterator<Item = R>) -> CliResult<()> {
        match self.format {
            Some(Format::Json) => write_json(self.path.as_deref(), &rows.into_iter().collect::<Vec<_>>()),
            _ => write_csv(self.path.as_deref(), rows),
        }
    }
}

fn write_json(out: Option<&Path>, value: &impl Serialize) -> CliResult<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_csv<R: Serialize>(out: Option<&Path>, rows: impl IntoIterator<Item = R>) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn config(c: &Charges) -> CliResult<ChargeConfig> {
    Ok(ChargeConfig::new(c.heights.beta1, c.heights.beta2, c.gamma)?)
}

fn check_mass(cfg: &ChargeConfig, t: f64) -> CliResult<()> {
    if t > 0.0 && t < cfg.total_mass() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("mass t = {t} must lie in (0, {})", cfg.total_mass())))
    }
}

fn grid(from: f64, to: f64, n: usize) -> CliResult<Vec<f64>> {
    if n < 2 || !(from < to) {
        return Err(Failure::Usage(format!("need from < to and n >= 2, got {from}, {to}, {n}")));
    }
    let mut xs: Vec<f64> = (0..n - 1).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect();
    xs.push(to);
    Ok(xs)
}

fn evolve_options(tol: &Tolerances) -> EvolveOptions {
    let mut opts = EvolveOptions::default();
    if let Some(v) = tol.newton {
        opts.solver.newton.tol = v;
    }
    if let Some(v) = tol.quad {
        opts.solver.quad_tol = v;
        opts.event_quad_tol = v;
    }
    if let Some(v) = tol.ode_rtol {
        opts.ode.rtol = v;
    }
    if let Some(v) = tol.ode_atol {
        opts.ode.atol = v;
    }
    if let Some(v) = tol.event {
        opts.ode.event_tol = v;
    }
    opts
}

/// Worker pool for grid commands, capped by `EQFIELD_THREADS`.
fn pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EQFIELD_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("EQFIELD_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Serialize)]
struct CriticalGammas {
    beta1: f64,
    beta2: f64,
    region: Region,
    f: f64,
    gamma_1: Option<f64>,
    gamma_tilde_1: Option<f64>,
    gamma_tilde_2: Option<f64>,
    gamma_2: Option<f64>,
    equal_minima_gamma: Option<f64>,
}

fn critical_gammas(h: &Heights) -> CliResult<CriticalGammas> {
    let class = classify(h.beta1, h.beta2)?;
    let window = gamma_tilde_window(h.beta1, h.beta2)?;
    let interval = find_gamma_interval(h.beta1, h.beta2)?;
    Ok(CriticalGammas {
        beta1: h.beta1,
        beta2: h.beta2,
        region: class.region,
        f: class.value,
        gamma_1: interval.as_ref().map(|i| i.gamma_1),
        gamma_tilde_1: window.map(|w| w.gamma_tilde_1),
        gamma_tilde_2: window.map(|w| w.gamma_tilde_2),
        gamma_2: interval.as_ref().map(|i| i.gamma_2),
        equal_minima_gamma: equal_minima_gamma(h.beta1, h.beta2)?,
    })
}

fn section_row(beta1: f64, beta2: f64) -> CliResult<SectionRow> {
    let c = critical_gammas(&Heights { beta1, beta2 })?;
    Ok(SectionRow {
        beta1,
        beta2,
        region: c.region.to_string(),
        gamma_1: c.gamma_1,
        gamma_tilde_1: c.gamma_tilde_1,
        gamma_tilde_2: c.gamma_tilde_2,
        gamma_2: c.gamma_2,
    })
}

fn support_samples(s: &SupportState, n: usize) -> Vec<f64> {
    let cuts = s.cuts();
    let total: f64 = cuts.iter().map(|(a, b)| b - a).sum();
    let mut xs = Vec::with_capacity(n + 2 * cuts.len());
    for &(a, b) in &cuts {
        let m = ((n as f64 * (b - a) / total).round() as usize).max(2);
        xs.extend((0..m - 1).map(|k| a + (b - a) * k as f64 / (m - 1) as f64));
        xs.push(b);
    }
    xs
}

pub fn run(command: Command, out: Output, tol: Tolerances) -> CliResult<()> {
    match command {
        Command::Classify(h) => {
            let c = classify(h.beta1, h.beta2)?;
            out.json(&json!({ "beta1": h.beta1, "beta2": h.beta2, "region": c.region, "f": c.value, "scale": c.scale }))
        }
        Command::CriticalGammas(h) => out.json(&critical_gammas(&h)?),
        Command::Solve { charges, t } => {
            let cfg = config(&charges)?;
            check_mass(&cfg, t)?;
            let state = state_at(&cfg, t, &evolve_options(&tol))?;
            let residual_norm = Some(residuals(&cfg, &state)?.norm_inf());
            out.json(&StateFile { config: cfg, state, residual_norm })
        }
        Command::Evolve { charges, t_stop, every, events } => {
            let cfg = config(&charges)?;
            let opts = evolve_options(&tol);
            let t_stop = t_stop.unwrap_or_else(|| default_t_stop(&cfg, &opts));
            check_mass(&cfg, t_stop)?;
            if every == 0 {
                return Err(Failure::Usage("--every must be positive".into()));
            }
            let traj = evolve_from_start(&cfg, t_stop, &opts)?;
            if let eqfield_core::dynamics::TrajectoryStatus::Truncated { t, reason } = &traj.status {
                return Err(Failure::Numerical(eqfield_core::Error::Integration { t: *t, reason: reason.clone() }));
            }
            let last = traj.states.len() - 1;
            let quad = 1e-12;
            out.table(
                traj.states
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % every == 0 || *i == last)
                    .map(|(_, s)| StateRow::new(&cfg, s, quad)),
            )?;
            if let Some(p) = events {
                write_json(Some(&p), &traj.events)?;
            }
            Ok(())
        }
        Command::PhaseDiagram { charges } => {
            let cfg = config(&charges)?;
            let (diagram, _) = phase_diagram_with(&cfg, &evolve_options(&tol))?;
            out.json(&diagram)
        }
        Command::Density { charges, t, n } => {
            let cfg = config(&charges)?;
            check_mass(&cfg, t)?;
            let state = state_at(&cfg, t, &evolve_options(&tol))?;
            let rows: CliResult<Vec<SampleRow>> = support_samples(&state, n)
                .into_iter()
                .map(|x| Ok(SampleRow { x, density: density(&cfg, &state, x)? }))
                .collect();
            out.table(rows?)
        }
        Command::LimitDensity { charges, from, to, n, normalization } => {
            let cfg = config(&charges)?;
            let mode = match normalization {
                Normalization::Unit => LimitNormalization::UnitMass,
                Normalization::Total => LimitNormalization::TotalMass,
            };
            let lm = LimitMeasure::from_config(&cfg, mode);
            out.table(grid(from, to, n)?.into_iter().map(|x| SampleRow { x, density: lm.density(x) }))
        }
        Command::RegionCurve { from, to, n } => {
            let xs = grid(from, to, n)?;
            let pts: Vec<CurveRow> = pool()?.install(|| {
                xs.par_iter().filter_map(|&b1| curve_point(b1).map(|b2| CurveRow { beta1: b1, beta2: b2 })).collect()
            });
            out.table(pts)
        }
        Command::BodySection { beta1, beta2, diagonal, from, to, n } => {
            let xs = grid(from, to, n)?;
            if xs[0] <= 0.0 {
                return Err(Failure::Usage("heights must be positive".into()));
            }
            let point = |x: f64| match (beta1, beta2, diagonal) {
                (Some(b1), _, _) => (b1, x),
                (_, Some(b2), _) => (x, b2),
                _ => (x, x),
            };
            let rows: CliResult<Vec<SectionRow>> = pool()?.install(|| {
                xs.par_iter()
                    .map(|&x| {
                        let (b1, b2) = point(x);
                        section_row(b1, b2)
                    })
                    .collect()
            });
            out.table(rows?)
        }
        Command::Verify { state, n_support, n_off } => {
            let text = std::fs::read_to_string(&state).map_err(|e| Failure::Usage(format!("{}: {e}", state.display())))?;
            let file: StateFile = serde_json::from_str(&text)?;
            file.state.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            check_mass(&file.config, file.state.t())?;
            let residual_norm = residuals(&file.config, &file.state)?.norm_inf();
            let audit = audit_equilibrium(&file.config, &file.state, n_support, n_off)?;
            let passes = audit.passes(tol.audit.unwrap_or(1e-5), tol.mass.unwrap_or(1e-6));
            let report = json!({ "passes": passes, "residual_norm": residual_norm, "audit": audit });
            out.json(&report)?;
            if passes {
                Ok(())
            } else {
                Err(Failure::Check(json!({ "error": "audit_failed", "report": report })))
            }
        }
    }
}
