//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use eqfield_core::criticality::{
    arg_sum_prediction, arg_sum_test, argument_identity_residuals, double_root_bounds_hold,
};
use eqfield_core::dynamics::{
    default_t_stop, evolve_from_start, phase_diagram_with, LimitMeasure, LimitNormalization,
};
use eqfield_core::field::gamma_tilde_window;
use eqfield_core::measure::{audit_equilibrium, mass};
use eqfield_core::numerics::{tanh_sinh_split, QuadOptions};
use eqfield_core::region::{asymptote, curve_point, curve_trace, f_boundary_exact};
use eqfield_core::solver::{seed_small_t, solve, solve_onecut};
use eqfield_core::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// The Omega0 grid used by the symmetry and double-root checks.
const GRID: [(f64, f64); 5] = [(0.3, 0.3), (0.2, 0.6), (0.4, 0.7), (0.6, 0.35), (0.7, 0.5)];

const SAMPLE_FRACTIONS: [f64; 14] = [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Masses for the comparison against direct solves in the symmetric run.
const CHECKPOINTS: [f64; 10] = [0.05, 0.1, 0.2, 0.3, 0.38, 0.45, 0.6, 0.9, 1.3, 1.8];

struct Suite {
    runs: Vec<(ChargeConfig, Trajectory)>,
    symmetric_half: Trajectory,
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let configs = [
            (0.5, 0.5, 1.0),
            (0.3, 0.3, 1.0),
            (0.3, 0.3, 0.5),
            (0.3, 0.3, 0.2),
            (0.3, 0.3, 0.03),
            (0.5, 2.7, 1.0),
            (1.5, 1.5, 1.0),
        ];
        let runs = configs
            .iter()
            .map(|&(b1, b2, g)| {
                let cfg = ChargeConfig::new(b1, b2, g).unwrap();
                let opts = EvolveOptions {
                    sample_times: SAMPLE_FRACTIONS.iter().map(|f| f * cfg.total_mass()).collect(),
                    ..EvolveOptions::default()
                };
                let traj = evolve_from_start(&cfg, default_t_stop(&cfg, &opts), &opts).unwrap();
                (cfg, traj)
            })
            .collect();
        let cfg = ChargeConfig::symmetric(0.5).unwrap();
        let opts = EvolveOptions { sample_times: CHECKPOINTS.to_vec(), ..EvolveOptions::default() };
        let symmetric_half = evolve_from_start(&cfg, default_t_stop(&cfg, &opts), &opts).unwrap();
        Suite { runs, symmetric_half }
    })
}

/// Every sampled state of the suite, re-solved by Newton at its own mass.
fn solved_states() -> &'static Vec<(ChargeConfig, SupportState)> {
    static STATES: OnceLock<Vec<(ChargeConfig, SupportState)>> = OnceLock::new();
    STATES.get_or_init(|| {
        let opts = SolverOptions::default();
        suite()
            .runs
            .iter()
            .flat_map(|(cfg, traj)| traj.samples.iter().map(move |s| (*cfg, solve(cfg, s.t(), s, &opts).unwrap())))
            .collect()
    })
}

fn c01() -> Outcome {
    ensure(f_boundary_exact(1, 1) == 0, "f(1,1) != 0")?;
    ensure(classify(1.0, 1.0).map_err(|e| e.to_string())?.region == Region::OnCurve, "(1,1) not on the curve")?;
    ensure(f_boundary(0.0, 0.0) == -256.0, "f(0,0) != -256")?;
    Ok("f(1,1) = 0, f(0,0) = -256, (1,1) on the curve".into())
}

fn c02() -> Outcome {
    let c = classify(0.5, 2.7).map_err(|e| e.to_string())?;
    ensure(c.region == Region::OmegaInf, format!("got {}", c.region))?;
    Ok(format!("region {} with f = {:.4}", c.region, c.value))
}

fn c03() -> Outcome {
    let a = asymptote();
    ensure(curve_point(a - 1e-3).is_none(), "curve point left of the asymptote")?;
    ensure(curve_point(a + 1e-3).is_some(), "no curve point right of the asymptote")?;
    for k in 0..50 {
        let left = 0.01 + (a - 1e-3 - 0.01) * k as f64 / 49.0;
        ensure(curve_point(left).is_none(), format!("curve point at beta1 = {left}"))?;
    }
    let grid: Vec<f64> = (0..400).map(|k| a + 1e-3 + (4.0 - a) * k as f64 / 399.0).collect();
    let trace = curve_trace(&grid);
    ensure(trace.len() == grid.len(), "missing curve points")?;
    ensure(trace.windows(2).all(|w| w[1].1 < w[0].1), "curve not decreasing")?;
    Ok(format!("asymptote {a:.6}; {} traced points strictly decreasing", trace.len()))
}

fn c04() -> Outcome {
    let w1 = gamma_tilde_window(1e-3, 1.0).map_err(|e| e.to_string())?.ok_or("no window at (1e-3, 1)")?;
    let w2 = gamma_tilde_window(1.0, 1e-3).map_err(|e| e.to_string())?.ok_or("no window at (1, 1e-3)")?;
    ensure((w1.gamma_tilde_1 - 1.6180).abs() < 1e-2, format!("Gamma~1 = {}", w1.gamma_tilde_1))?;
    ensure((w2.gamma_tilde_2 - 0.6180).abs() < 1e-2, format!("Gamma~2 = {}", w2.gamma_tilde_2))?;
    Ok(format!("Gamma~1 = {:.6}, Gamma~2 = {:.6}", w1.gamma_tilde_1, w2.gamma_tilde_2))
}

fn c05() -> Outcome {
    let traj = &suite().runs[0].1;
    ensure(traj.is_complete(), format!("{:?}", traj.status))?;
    let kinds: Vec<_> = traj.events.iter().map(|e| e.kind).collect();
    ensure(kinds == [TransitionKind::TypeII], format!("events {kinds:?}"))?;
    let ev = traj.events[0];
    ensure((ev.t - 0.4).abs() < 1e-3, format!("T2 = {}", ev.t))?;
    ensure(ev.location.abs() < 1e-4, format!("collision at {}", ev.location))?;
    let after = traj.states.iter().find(|s| s.t() > ev.t).ok_or("no state after the fusion")?;
    let e = after.endpoints();
    let want = 1.5f64.sqrt();
    ensure((e[0] + want).abs() < 1e-3 && (e[1] - want).abs() < 1e-3, format!("outer endpoints {e:?}"))?;
    Ok(format!("TypeII at t = {:.7}, x = {:.1e}, endpoints ({:.6}, {:.6})", ev.t, ev.location, e[0], e[1]))
}

fn c06() -> Outcome {
    let cfg = ChargeConfig::symmetric(1.5).unwrap();
    let opts = EvolveOptions::default();
    let traj = evolve_from_start(&cfg, 0.99 * cfg.total_mass(), &opts).map_err(|e| e.to_string())?;
    ensure(traj.is_complete(), format!("{:?}", traj.status))?;
    ensure(traj.events.is_empty(), format!("events {:?}", traj.events))?;
    let last = traj.final_state().unwrap();
    Ok(format!("no events up to t = {:.4}, {} steps", last.t(), traj.states.len()))
}

fn c07() -> Outcome {
    let states = solved_states();
    let mut worst_dev = 0.0f64;
    let mut worst_excess = f64::INFINITY;
    for (cfg, s) in states {
        let audit = audit_equilibrium(cfg, s, 50, 50).map_err(|e| e.to_string())?;
        ensure(
            audit.passes(1e-5, 1e-6),
            format!("{cfg} at t = {}: deviation {:e}, excess {:e}", s.t(), audit.max_deviation_on_support, audit.min_excess_off_support),
        )?;
        worst_dev = worst_dev.max(audit.max_deviation_on_support);
        worst_excess = worst_excess.min(audit.min_excess_off_support);
    }
    Ok(format!("{} states, max deviation {worst_dev:.2e}, min off-support excess {worst_excess:.2e}", states.len()))
}

fn c08() -> Outcome {
    let states = solved_states();
    let (two, one): (Vec<_>, Vec<_>) = states.iter().partition(|(_, s)| s.cut_count() == 2);
    ensure(two.len() >= 10, "too few two-cut states")?;
    let chosen: Vec<_> = two.iter().take(15).chain(one.iter().take(15)).collect();
    ensure(chosen.len() == 30, "fewer than 30 states")?;
    let mut worst = 0.0f64;
    for (cfg, s) in chosen {
        let m = mass(cfg, s, 1e-12).into_result().map_err(|e| e.to_string())?;
        let rel = (m - s.t()).abs() / s.t();
        ensure(rel <= 1e-6, format!("{cfg} at t = {}: mass {m}", s.t()))?;
        worst = worst.max(rel);
    }
    Ok(format!("30 states (15 two-cut), max relative mass error {worst:.2e}"))
}

/// Newton continuation in `t` from `from` to `to`, never touching the ODE.
fn continue_to(cfg: &ChargeConfig, from: SupportState, to: f64, steps: usize) -> SupportState {
    let opts = SolverOptions::default();
    let t0 = from.t();
    let mut s = from;
    for k in 1..=steps {
        s = solve(cfg, t0 + (to - t0) * k as f64 / steps as f64, &s, &opts).unwrap();
    }
    s
}

fn c09() -> Outcome {
    let traj = &suite().symmetric_half;
    ensure(traj.samples.len() == CHECKPOINTS.len(), format!("{} samples", traj.samples.len()))?;
    let cfg = ChargeConfig::symmetric(0.5).unwrap();
    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    // two-cut branch from the small-mass seed, one-cut branch from just past
    // the fusion, where the endpoints are close to +-sqrt(1.5)
    let mut two = seed_small_t(&cfg, 1e-3, &opts).unwrap();
    let a = 1.5f64.sqrt();
    let mut one = solve_onecut(
        &cfg,
        0.41,
        &SupportState::one_cut(0.41, -a, a, BZeros::ConjugatePair { re: 0.0, im: 0.05 }).unwrap(),
        &opts,
    )
    .unwrap();
    for sample in &traj.samples {
        let t = sample.t();
        let direct = if t < 0.4 {
            two = continue_to(&cfg, two, t, 40);
            two
        } else {
            one = continue_to(&cfg, one, t, 40);
            one
        };
        let d = sample.distance(&direct).ok_or(format!("phase mismatch at t = {t}"))?;
        ensure(d < 1e-6, format!("t = {t}: distance {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("10 checkpoints, max deviation {worst:.2e}, polish drift {:.2e}", traj.max_polish_drift))
}

fn c10() -> Outcome {
    let gi = find_gamma_interval(0.3, 0.3).map_err(|e| e.to_string())?.ok_or("no interval")?;
    let w = gi.window;
    ensure(
        gi.gamma_1 < w.gamma_tilde_1 && w.gamma_tilde_1 < w.gamma_tilde_2 && w.gamma_tilde_2 < gi.gamma_2,
        "ordering violated",
    )?;
    let cfg = ChargeConfig::new(0.3, 0.3, 1.0).unwrap();
    let (d, _) = phase_diagram_with(&cfg, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    ensure(d.scenario == Scenario::TwoMinima, format!("scenario {:?}", d.scenario))?;
    let kinds = d.kinds();
    let sequence_ok = kinds == [TransitionKind::TypeI, TransitionKind::TypeII]
        || (d.initial_cuts == 2 && kinds == [TransitionKind::TypeII]);
    ensure(sequence_ok, format!("events {kinds:?}"))?;
    let (t1, t2) = (d.t1.ok_or("no T1")?, d.t2.ok_or("no T2")?);
    ensure(t1 < t2 && t2 < cfg.total_mass(), format!("T1 = {t1}, T2 = {t2}"))?;
    Ok(format!(
        "{:.6} < {:.6} < {:.6} < {:.6}; T1 = {t1}, T2 = {t2:.6}",
        gi.gamma_1, w.gamma_tilde_1, w.gamma_tilde_2, gi.gamma_2
    ))
}

fn c11() -> Outcome {
    let (mut tilde, mut crit) = (0.0f64, 0.0f64);
    for (b1, b2) in GRID {
        ensure(classify(b1, b2).unwrap().region == Region::Omega0, format!("({b1}, {b2}) not in Omega0"))?;
        let a = find_gamma_interval(b1, b2).map_err(|e| e.to_string())?.ok_or("no interval")?;
        let b = find_gamma_interval(b2, b1).map_err(|e| e.to_string())?.ok_or("no interval")?;
        tilde = tilde.max((a.window.gamma_tilde_1 * b.window.gamma_tilde_2 - 1.0).abs());
        crit = crit.max((a.gamma_1 * b.gamma_2 - 1.0).abs());
    }
    ensure(tilde <= 1e-6, format!("window products off by {tilde:e}"))?;
    ensure(crit <= 1e-5, format!("critical products off by {crit:e}"))?;
    Ok(format!("5 points: window products within {tilde:.1e}, critical products within {crit:.1e}"))
}

fn c12() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(20261014);
    let mut tested = 0;
    while tested < 10_000 {
        let z = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(1e-3..5.0));
        let (c, d) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        if (c + d - 2.0 * z.re).abs() < 1e-9 {
            continue;
        }
        ensure(arg_sum_test(z, c, d) == arg_sum_prediction(z, c, d), format!("z = {z}, c = {c}, d = {d}"))?;
        tested += 1;
    }
    let mut visited = 0;
    let mut worst = 0.0f64;
    for (b1, b2) in GRID {
        let gi = find_gamma_interval(b1, b2).map_err(|e| e.to_string())?.ok_or("no interval")?;
        for s in gi.lower.visited.iter().chain(&gi.upper.visited) {
            let cfg = ChargeConfig::new(b1, b2, s.gamma).unwrap();
            let r = argument_identity_residuals(&cfg, s);
            let m = r[0].abs().max(r[1].abs());
            ensure(m < 1e-8, format!("({b1}, {b2}) gamma = {}: residual {m:e}", s.gamma))?;
            ensure(double_root_bounds_hold(s), format!("bounds fail at {s:?}"))?;
            worst = worst.max(m);
            visited += 1;
        }
    }
    Ok(format!("10000 argument-sum samples; {visited} double-root states, residual <= {worst:.1e}"))
}

fn c13() -> Outcome {
    let sym = ChargeConfig::symmetric(1.5).unwrap();
    for z in LimitMeasure::from_config(&sym, LimitNormalization::UnitMass).b_zeros().map_err(|e| e.to_string())? {
        ensure(z.re.abs() < 1e-12, format!("limit zero {z} off the imaginary axis"))?;
    }
    let mut worst_integral = 0.0f64;
    for cfg in [sym, ChargeConfig::new(0.5, 2.7, 1.0).unwrap(), ChargeConfig::new(0.3, 0.7, 3.0).unwrap()] {
        let lm = LimitMeasure::from_config(&cfg, LimitNormalization::UnitMass);
        let l = 200.0;
        let mut knots = vec![-l, l];
        for c in &lm.charges {
            knots.extend([c.z.re - c.z.im, c.z.re, c.z.re + c.z.im]);
        }
        knots.sort_by(f64::total_cmp);
        let inner = tanh_sinh_split(|x| lm.density(x), &knots, QuadOptions::with_tol(1e-13)).value;
        let total = lm.total_charge();
        let tails: f64 = lm
            .charges
            .iter()
            .map(|c| c.gamma / (total * PI) * (PI - ((l - c.z.re) / c.z.im).atan() - ((l + c.z.re) / c.z.im).atan()))
            .sum();
        worst_integral = worst_integral.max((inner + tails - 1.0).abs());
    }
    ensure(worst_integral <= 1e-8, format!("unit density integrates to 1 +- {worst_integral:e}"))?;
    let mut worst_zero = 0.0f64;
    for (cfg, traj) in &suite().runs {
        let last = traj.final_state().unwrap();
        if (last.t() - 0.999 * cfg.total_mass()).abs() > 1e-12 || last.cut_count() != 1 {
            return Err(format!("{cfg}: run did not reach 0.999 T in one cut"));
        }
        let e = last.endpoints();
        ensure(e[0] < -1e2 && e[1] > 1e2, format!("{cfg}: endpoints {e:?}"))?;
        let limit = LimitMeasure::from_config(cfg, LimitNormalization::UnitMass).b_zeros().unwrap();
        for b in last.b_zeros() {
            let d = limit.iter().map(|z| (z - b).norm()).fold(f64::INFINITY, f64::min);
            worst_zero = worst_zero.max(d);
        }
    }
    ensure(worst_zero < 1e-2, format!("zeros of B off their limits by {worst_zero:e}"))?;
    Ok(format!("limit density mass error {worst_integral:.1e}; B zeros within {worst_zero:.1e} of limits at 0.999 T"))
}

fn c14() -> Outcome {
    let s = suite();
    let mut worst = 0.0f64;
    let mut count = 0;
    for traj in s.runs.iter().map(|(_, t)| t).chain([&s.symmetric_half]) {
        ensure(traj.is_complete(), format!("{}: {:?}", traj.config, traj.status))?;
        let v = traj.monotonicity_violation();
        ensure(v <= 1e-9, format!("{}: violation {v:e}", traj.config))?;
        worst = worst.max(v);
        count += traj.states.len();
    }
    Ok(format!("{} trajectories, {count} states, worst violation {worst:.1e}", s.runs.len() + 1))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 14] = [
        ("boundary polynomial", c01),
        ("classification point", c02),
        ("asymptote and curve monotonicity", c03),
        ("two-minima window limits", c04),
        ("symmetric fusion", c05),
        ("symmetric run without transitions", c06),
        ("equilibrium conditions", c07),
        ("mass conservation", c08),
        ("integration against direct solves", c09),
        ("critical mass ordering and phase sequence", c10),
        ("swap and reciprocal symmetry", c11),
        ("argument identities and double-root bounds", c12),
        ("limit objects", c13),
        ("odd and even endpoint monotonicity", c14),
    ];
    let mut failed = 0;
    let start = Instant::now();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let ms = t.elapsed().as_millis();
        match result {
            Ok(detail) => println!("PASS criterion {:2} {name}: {detail} ({ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:2} {name}: {why} ({ms} ms)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
