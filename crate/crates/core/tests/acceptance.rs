//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines show up in plain
//! `cargo test` output. The process fails when the set of failing criteria
//! differs from `KNOWN_UNATTAINABLE`.

use hypsym::closed_forms::{barrier_profile, find_validity_radius, BarrierSpec};
use hypsym::exponents::{decay_roots, f_aux, lambda_max};
use hypsym::geometry::{eigen_log_gradient, geometry_suite, random_ball_point, random_direction, FD_STEP};
use hypsym::identities::{
    critical_trajectory, default_benchmarks, picone_constant, picone_gap, picone_monte_carlo, pohozaev_residuals,
    POHOZAEV_RADII, POHOZAEV_TOL,
};
use hypsym::numerics::geomspace;
use hypsym::radial_ode::{halfspace_eigen_residual, integrate};
use hypsym::shooting::{default_scan_config, default_scan_grid, find_ground_state, nonexistence_scan, Classification};
use hypsym::variational::{hardy_check, minimize_quotient, GridSpec, SplineBump, HARDY_R0};
use hypsym::{OdeConfig, ProblemParams, RadialProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

/// Criterion 8 asks for a FAST hit in the control run `(4, 2, 4, λ = 0.5)`.
/// For `n = 4, p = 2` every `λ ≤ 2` lies in the nonexistence range of the
/// critical problem, so no positive fast-decaying solution exists and the
/// control cannot produce one. The scan reports the separatrix honestly as
/// SLOW/UNDECIDED; a supplementary control at `λ = 2.1` is printed below.
const KNOWN_UNATTAINABLE: &[usize] = &[8];

const SEED: u64 = 42;

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn pp(n: usize, p: f64, q: f64, l: f64) -> ProblemParams {
    ProblemParams::new(n, p, q, l).unwrap()
}

fn run(id: usize, name: &'static str, budget_s: u64, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    let o = Outcome { id, name, passed: ok && elapsed <= budget, detail, elapsed, budget };
    println!(
        "criterion {:>2} {:<26} {}  [{:.2} s / {} s]  {}",
        o.id,
        o.name,
        if o.passed { "PASS" } else { "FAIL" },
        o.elapsed.as_secs_f64(),
        o.budget.as_secs(),
        o.detail
    );
    o
}

fn roots() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut ok = true;
    for &(n, p) in &[(3, 2.0), (4, 2.0), (4, 3.0), (5, 3.0)] {
        let lm = lambda_max(n, p).unwrap();
        let (c, top) = ((n as f64 - 1.0) / p, (n as f64 - 1.0) / (p - 1.0));
        for k in 0..100 {
            let l = lm * k as f64 / 100.0;
            let r = decay_roots(&pp(n, p, 2.0 * p, l)).unwrap();
            if k == 0 {
                ok &= r.beta == 0.0 && r.alpha == top;
                continue;
            }
            worst = worst.max((f_aux(r.alpha, n, p) - l).abs()).max((f_aux(r.beta, n, p) - l).abs());
            ok &= 0.0 < r.beta && r.beta < c && c < r.alpha && r.alpha <= top;
        }
    }
    (ok && worst <= 1e-12, format!("max |f(root) - λ| = {worst:.2e} (tol 1e-12), ordering and λ = 0 exact: {ok}"))
}

fn decay_rate(l: f64, target: f64) -> (bool, String) {
    match find_ground_state(&pp(3, 2.0, 4.0, l), &OdeConfig::default(), None) {
        Ok(gs) => {
            let e = (gs.logderiv_tail - target).abs();
            (e <= 1e-3, format!("α* = {:.10}, tail log-derivative {:.7} vs {target} (tol 1e-3)", gs.alpha_star, gs.logderiv_tail))
        }
        Err(e) => (false, e.to_string()),
    }
}

fn cross_method() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [0.0, 0.5] {
        let par = pp(3, 2.0, 4.0, l);
        let gs = find_ground_state(&par, &OdeConfig::default(), None);
        let mv = minimize_quotient(&par, &GridSpec::default(), 5000, None);
        match (gs, mv) {
            (Ok(g), Ok(m)) => {
                let rel = (g.sobolev_estimate - m.s_estimate).abs() / g.sobolev_estimate;
                ok &= rel <= 1e-2;
                parts.push(format!("λ={l}: S_shoot {:.7} S_var {:.7} rel {rel:.1e}", g.sobolev_estimate, m.s_estimate));
            }
            (g, m) => {
                ok = false;
                parts.push(format!("λ={l}: {:?} {:?}", g.err(), m.err()));
            }
        }
    }
    (ok, format!("{} (tol 1e-2)", parts.join("; ")))
}

fn barriers() -> (bool, String) {
    let mut ok = true;
    let mut cases = 0;
    let mut worst_radius = 0.0f64;
    for &(n, p, q) in &[(3, 2.0, 4.0), (4, 3.0, 5.0)] {
        let lm = lambda_max(n, p).unwrap();
        for frac in [0.0, 0.25, 0.5, 0.75] {
            let par = pp(n, p, q, frac * lm);
            let mut specs = vec![BarrierSpec::subsolution(par)];
            for m in [2, 4] {
                specs.push(BarrierSpec::supersolution(par, m).unwrap());
            }
            for s in specs {
                cases += 1;
                match find_validity_radius(&s) {
                    Ok(r) => {
                        ok &= r.radius.is_some() && r.refined_ok;
                        worst_radius = worst_radius.max(r.radius.unwrap_or(f64::INFINITY));
                    }
                    Err(_) => ok = false,
                }
            }
        }
    }
    (ok, format!("{cases} barriers hold their sign past R on the refined grid, largest R = {worst_radius:.4}"))
}

fn eigen() -> (bool, String) {
    let mut sets = default_benchmarks();
    for &(n, p) in &[(3, 2.0), (4, 2.0), (4, 3.0), (5, 3.0)] {
        let lm = lambda_max(n, p).unwrap();
        for frac in [0.0, 0.5] {
            sets.push(pp(n, p, 2.0 * p, frac * lm));
        }
    }
    let grid = geomspace(1e-2, 1e2, 200);
    let (mut eq, mut ld) = (0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for par in &sets {
        let r = par.roots();
        for a in [r.alpha, r.beta] {
            if a > 0.0 {
                let rep = halfspace_eigen_residual(a, par, &grid).unwrap();
                eq = eq.max(rep.equation.max_abs).max(rep.linearized.max_abs);
            }
        }
        for _ in 0..1000 {
            let x = random_ball_point(&mut rng, par.n, 0.9);
            let xi = random_direction(&mut rng, par.n);
            let g = eigen_log_gradient(&xi, &x, r.alpha, FD_STEP).unwrap_or(f64::INFINITY);
            ld = ld.max((g - r.alpha).abs());
        }
    }
    (
        eq <= 1e-12 && ld <= 1e-6,
        format!("{} parameter sets: max ODE residual {eq:.1e} (tol 1e-12), max log-gradient error {ld:.1e} (tol 1e-6)", sets.len()),
    )
}

fn benchmark_profiles(par: &ProblemParams) -> Vec<(String, RadialProfile)> {
    let mut out = Vec::new();
    let grid = match find_ground_state(par, &OdeConfig::default(), None) {
        Ok(gs) => {
            let g = gs.profile.t.clone();
            out.push(("ground state".to_string(), gs.profile));
            g
        }
        Err(_) => {
            let tr = integrate(0.5, par, &OdeConfig::default().with_t_max(20.0)).unwrap();
            let g = tr.profile.t.clone();
            out.push(("trajectory α=0.5".to_string(), tr.profile));
            g
        }
    };
    for m in [2, 4] {
        out.push((format!("super m={m}"), barrier_profile(&BarrierSpec::supersolution(*par, m).unwrap(), &grid).unwrap()));
    }
    out.push(("sub".into(), barrier_profile(&BarrierSpec::subsolution(*par), &grid).unwrap()));
    out
}

fn picone() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let c = picone_constant(p);
        let mc = picone_monte_carlo(p, c, SEED, 1000).unwrap_or(false);
        ok &= mc;
        let sets: Vec<ProblemParams> = if p < 2.0 {
            vec![pp(3, 1.5, 2.5, 0.2)]
        } else {
            default_benchmarks().into_iter().filter(|b| b.p == p).collect()
        };
        let mut pairs = 0;
        for par in sets {
            let profs = benchmark_profiles(&par);
            for i in 0..profs.len() {
                for j in i + 1..profs.len() {
                    pairs += 1;
                    let good = picone_gap(&profs[i].1, &profs[j].1).map(|r| r.sign_ok == Some(true)).unwrap_or(false);
                    if !good {
                        parts.push(format!("p={p} {} vs {} fails", profs[i].0, profs[j].0));
                    }
                    ok &= good;
                }
            }
        }
        parts.push(format!("p={p}: C={c}, 1000 random pairs {}, {pairs} profile pairs", if mc { "ok" } else { "FAIL" }));
    }
    (ok, parts.join("; "))
}

fn pohozaev() -> (bool, String) {
    let mut ok = true;
    let mut worst = 0.0f64;
    let (mut checked, mut negative) = (0, 0);
    for &(n, p) in &[(3, 2.0), (4, 2.0), (4, 3.0), (5, 3.0), (3, 1.5)] {
        for alpha in [0.1, 0.3, 1.0, 3.0, 10.0] {
            let pr = match critical_trajectory(n, p, alpha) {
                Ok(pr) => pr,
                Err(_) => {
                    ok = false;
                    continue;
                }
            };
            let t_end = *pr.t.last().unwrap();
            for &r in POHOZAEV_RADII.iter().filter(|&&r| r <= t_end) {
                match pohozaev_residuals(&pr, r) {
                    Ok(rep) => {
                        let (a, b) = rep.relative();
                        worst = worst.max(a).max(b);
                        checked += 1;
                        let upto = pr.t.partition_point(|&s| s <= r);
                        let pos_dec = pr.u[..upto].iter().all(|&u| u > 0.0) && pr.du[1..upto].iter().all(|&d| d < 0.0);
                        if pos_dec {
                            negative += 1;
                            ok &= rep.strictly_negative();
                        }
                    }
                    Err(_) => ok = false,
                }
            }
        }
    }
    ok &= worst <= POHOZAEV_TOL;
    (
        ok,
        format!("{checked} (trajectory, R) pairs: max relative residual {worst:.1e} (tol 1e-6); contradiction term negative on {negative} positive decreasing cases"),
    )
}

fn scan_summary(par: &ProblemParams) -> Result<(usize, String), String> {
    let rep = nonexistence_scan(par, &default_scan_grid(), &default_scan_config(par.n)).map_err(|e| e.to_string())?;
    let count = |c: Classification| rep.rows.iter().filter(|r| r.classification == c).count();
    let seps: Vec<String> = rep
        .separatrices
        .iter()
        .map(|s| format!("{:.6e}:{}:{:.4}", s.alpha, s.classification.as_str(), s.logderiv.unwrap_or(f64::NAN)))
        .collect();
    let poho = rep.rows.iter().filter_map(|r| r.pohozaev.as_ref()).filter(|p| !p.passes(POHOZAEV_TOL)).count();
    Ok((
        rep.fast_hits,
        format!(
            "{}: CROSS {} SLOW {} FAST {} UNDECIDED {}, separatrices [{}], Pohozaev failures {poho}",
            par.label(),
            count(Classification::Cross),
            count(Classification::Slow),
            count(Classification::Fast),
            count(Classification::Undecided),
            seps.join(", ")
        ),
    ))
}

fn nonexistence() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, p) in [(3, 2.0), (4, 2.0)] {
        match scan_summary(&ProblemParams::critical(n, p).unwrap()) {
            Ok((hits, s)) => {
                ok &= hits == 0;
                parts.push(s);
            }
            Err(e) => {
                ok = false;
                parts.push(e);
            }
        }
    }
    match scan_summary(&pp(4, 2.0, 4.0, 0.5)) {
        Ok((hits, s)) => {
            ok &= hits >= 1;
            parts.push(format!("control {s}"));
        }
        Err(e) => {
            ok = false;
            parts.push(e);
        }
    }
    (ok, parts.join(" | "))
}

fn geometry() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [3, 4] {
        let g = geometry_suite(n, 100_000, SEED);
        ok &= g.passed();
        parts.push(format!(
            "n={n}: violations {}/{}/{}/{}, inequality strict {} equality {}",
            g.involution_failures,
            g.reflection_isometry_failures,
            g.distance_identity_failures,
            g.inequality_violations,
            g.inequality_ok,
            g.inequality_equality
        ));
    }
    (ok, parts.join("; "))
}

fn hardy() -> (bool, String) {
    let mut ok = true;
    let mut min_ratio = f64::INFINITY;
    let sets = default_benchmarks();
    for par in &sets {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..50 {
            let bump = SplineBump::random(&mut rng, (3.0, 30.0));
            match hardy_check(&bump, par, HARDY_R0) {
                Ok(r) => {
                    ok &= r.holds;
                    min_ratio = min_ratio.min(r.rhs / r.lhs);
                }
                Err(_) => ok = false,
            }
        }
    }
    (ok, format!("50 bumps x {} benchmarks, min rhs/lhs = {min_ratio:.4}", sets.len()))
}

fn main() {
    let outcomes = vec![
        run(1, "decay roots", 1, roots),
        run(2, "decay rate λ=0", 30, || decay_rate(0.0, 2.0)),
        run(2, "decay rate λ=0.75", 30, || decay_rate(0.75, 1.5)),
        run(3, "cross-method constant", 300, cross_method),
        run(4, "barrier certificates", 10, barriers),
        run(5, "eigen-ODE exactness", 60, eigen),
        run(6, "Picone suite", 120, picone),
        run(7, "Pohozaev identities", 120, pohozaev),
        run(8, "nonexistence scan", 600, nonexistence),
        run(9, "geometry suite", 10, geometry),
        run(10, "Hardy suite", 60, hardy),
    ];

    // supplementary control above the nonexistence range of n = 4
    // the analysis behind KNOWN_UNATTAINABLE predicts a hit here
    let start = Instant::now();
    let supplementary = match scan_summary(&pp(4, 2.0, 4.0, 2.1)) {
        Ok((hits, s)) => {
            println!("info: supplementary control {s}, FAST hits {hits} [{:.2} s]", start.elapsed().as_secs_f64());
            hits >= 1
        }
        Err(e) => {
            println!("info: supplementary control failed: {e}");
            false
        }
    };

    let mut failing: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    failing.dedup();
    println!("failing criteria: {failing:?}; known unattainable: {KNOWN_UNATTAINABLE:?}");
    if failing != KNOWN_UNATTAINABLE || !supplementary {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: ok");
}
