//! Row builders for `verify`.

use crate::output::{label, row};
use hypsym::closed_forms::{barrier_profile, find_validity_radius, BarrierSpec, VALIDITY_RANGE};
use hypsym::geometry::{eigen_log_gradient, geometry_suite, random_ball_point, random_direction, FD_STEP};
use hypsym::identities::{
    critical_trajectory, picone_constant, picone_gap, picone_monte_carlo, pohozaev_sweep, SuiteRow, POHOZAEV_TOL,
};
use hypsym::numerics::geomspace;
use hypsym::radial_ode::halfspace_eigen_residual;
use hypsym::shooting::find_ground_state;
use hypsym::variational::{hardy_check, SplineBump, HARDY_R0};
use hypsym::{OdeConfig, ProblemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PICONE_PAIRS: usize = 1000;
pub const LOG_GRADIENT_POINTS: usize = 1000;
pub const HARDY_BUMPS: usize = 50;

fn error_row(b: &str, check: &str, e: impl ToString) -> SuiteRow {
    row(b, check, false, f64::NAN, f64::NAN, e.to_string())
}

pub fn geometry(benchmarks: &[ProblemParams], samples: usize, seed: u64) -> Vec<SuiteRow> {
    let mut dims: Vec<usize> = benchmarks.iter().map(|b| b.n).collect();
    dims.sort_unstable();
    dims.dedup();
    let mut rows = Vec::new();
    for n in dims {
        let g = geometry_suite(n, samples, seed);
        let b = format!("n={n}");
        rows.push(row(&b, "involution", g.involution_failures == 0, g.involution_max_err, 1e-10, "max error of Φ∘Φ"));
        rows.push(row(
            &b,
            "reflection_isometry",
            g.reflection_isometry_failures == 0,
            g.reflection_isometry_max_err,
            1e-10,
            "max relative distance change",
        ));
        rows.push(row(
            &b,
            "distance_identity",
            g.distance_identity_failures == 0,
            g.distance_identity_max_err,
            1e-10,
            "max ball/half-space distance mismatch",
        ));
        rows.push(row(
            &b,
            "reflection_inequality",
            g.inequality_violations == 0,
            g.inequality_violations as f64,
            0.0,
            format!("{} strict, {} equality cases", g.inequality_ok, g.inequality_equality),
        ));
    }
    rows
}

pub fn subsuper(benchmarks: &[ProblemParams]) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for par in benchmarks {
        let b = label(par);
        let mut specs = vec![("subsolution".to_string(), Ok(BarrierSpec::subsolution(*par)))];
        for m in [2, 4] {
            specs.push((format!("supersolution_m{m}"), BarrierSpec::supersolution(*par, m)));
        }
        for (name, spec) in specs {
            match spec.and_then(|s| find_validity_radius(&s)) {
                Ok(r) => rows.push(row(
                    &b,
                    &name,
                    r.radius.is_some() && r.refined_ok,
                    r.radius.unwrap_or(f64::NAN),
                    VALIDITY_RANGE.1,
                    "validity radius; sign re-checked on a 10x finer grid",
                )),
                Err(e) => rows.push(error_row(&b, &name, e)),
            }
        }
    }
    rows
}

pub fn eigen(benchmarks: &[ProblemParams], seed: u64) -> Vec<SuiteRow> {
    let grid = geomspace(1e-2, 1e2, 200);
    let mut rows = Vec::new();
    for (i, par) in benchmarks.iter().enumerate() {
        let b = label(par);
        let r = par.roots();
        for (name, a) in [("eigen_alpha", r.alpha), ("eigen_beta", r.beta)] {
            if a == 0.0 {
                continue;
            }
            match halfspace_eigen_residual(a, par, &grid) {
                Ok(rep) => {
                    let v = rep.equation.max_abs.max(rep.linearized.max_abs);
                    rows.push(row(&b, name, v <= 1e-12, v, 1e-12, "max residual of both half-space equations"));
                }
                Err(e) => rows.push(error_row(&b, name, e)),
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let mut worst = 0.0f64;
        for _ in 0..LOG_GRADIENT_POINTS {
            let x = random_ball_point(&mut rng, par.n, 0.9);
            let xi = random_direction(&mut rng, par.n);
            let g = eigen_log_gradient(&xi, &x, r.alpha, FD_STEP).unwrap_or(f64::INFINITY);
            worst = worst.max((g - r.alpha).abs());
        }
        rows.push(row(&b, "eigen_log_gradient", worst <= 1e-6, worst, 1e-6, "max | |∇ log E| - α_λ |"));
    }
    rows
}

pub fn picone(benchmarks: &[ProblemParams], seed: u64) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let c = picone_constant(p);
        let b = format!("p={}", crate::output::fmt_g(p));
        match picone_monte_carlo(p, c, seed, PICONE_PAIRS) {
            Ok(ok) => rows.push(row(&b, "picone_random_pairs", ok, PICONE_PAIRS as f64, c, "pairs; threshold column holds C")),
            Err(e) => rows.push(error_row(&b, "picone_random_pairs", e)),
        }
    }
    for par in benchmarks {
        let b = label(par);
        let gs = match find_ground_state(par, &OdeConfig::default(), None) {
            Ok(g) => g.profile,
            Err(e) => {
                rows.push(error_row(&b, "picone_benchmark_pairs", e));
                continue;
            }
        };
        let mut profiles = vec![("ground_state".to_string(), Ok(gs.clone()))];
        for m in [2, 4] {
            profiles.push((
                format!("supersolution_m{m}"),
                BarrierSpec::supersolution(*par, m).and_then(|s| barrier_profile(&s, &gs.t)),
            ));
        }
        profiles.push(("subsolution".into(), barrier_profile(&BarrierSpec::subsolution(*par), &gs.t)));
        for i in 0..profiles.len() {
            for j in i + 1..profiles.len() {
                let name = format!("picone_{}_{}", profiles[i].0, profiles[j].0);
                let rep = match (&profiles[i].1, &profiles[j].1) {
                    (Ok(u), Ok(v)) => picone_gap(u, v),
                    (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                };
                match rep {
                    Ok(r) => {
                        let min = r.pointwise.iter().copied().fold(f64::INFINITY, f64::min);
                        rows.push(row(&b, &name, r.sign_ok == Some(true), min, 0.0, "min pointwise gap"));
                    }
                    Err(e) => rows.push(error_row(&b, &name, e)),
                }
            }
        }
    }
    rows
}

pub fn hardy(benchmarks: &[ProblemParams], seed: u64) -> Vec<SuiteRow> {
    let mut rows = Vec::new();
    for (i, par) in benchmarks.iter().enumerate() {
        let b = label(par);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let mut ok = true;
        let mut min_ratio = f64::INFINITY;
        let mut constant = f64::NAN;
        for _ in 0..HARDY_BUMPS {
            let bump = SplineBump::random(&mut rng, (3.0, 30.0));
            match hardy_check(&bump, par, HARDY_R0) {
                Ok(r) => {
                    ok &= r.holds;
                    min_ratio = min_ratio.min(r.rhs / r.lhs);
                    constant = r.constant;
                }
                Err(_) => ok = false,
            }
        }
        rows.push(row(&b, "hardy", ok, min_ratio, 1.0, format!("min rhs/lhs over {HARDY_BUMPS} bumps, C = {constant}")));
    }
    rows
}

pub fn pohozaev(benchmarks: &[ProblemParams]) -> Vec<SuiteRow> {
    let mut pairs: Vec<(usize, f64)> = benchmarks.iter().map(|b| (b.n, b.p)).collect();
    pairs.dedup();
    let mut rows = Vec::new();
    for (n, p) in pairs {
        for alpha in [0.3, 1.0, 5.0] {
            let b = format!("critical n={n} p={} α={}", crate::output::fmt_g(p), crate::output::fmt_g(alpha));
            match critical_trajectory(n, p, alpha).and_then(|pr| pohozaev_sweep(&pr)) {
                Ok(reps) => {
                    let worst = reps.iter().map(|r| r.relative().0.max(r.relative().1)).fold(0.0f64, f64::max);
                    rows.push(row(&b, "pohozaev_residuals", worst <= POHOZAEV_TOL, worst, POHOZAEV_TOL, "max relative residual over R"));
                    let neg = reps.iter().all(|r| r.strictly_negative());
                    let worst_term =
                        reps.iter().map(|r| r.contradiction_term / r.negativity_scale).fold(f64::NEG_INFINITY, f64::max);
                    rows.push(row(&b, "pohozaev_negativity", neg, worst_term, -1e-3, "max contradiction term / scale"));
                }
                Err(e) => rows.push(error_row(&b, "pohozaev_residuals", e)),
            }
        }
    }
    rows
}
