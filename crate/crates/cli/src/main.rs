//! `hypsym` command-line front end.
//!
//! Exit status: 0 when every check passes, 1 when a check fails or a
//! computation breaks down, 2 on usage errors.

mod config;
mod output;
mod suites;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypsym::exponents::{decay_roots, lambda_max};
use hypsym::identities::{default_benchmarks, pohozaev_residuals, PohozaevReport, SuiteReport, SuiteRow, POHOZAEV_RADII, POHOZAEV_TOL};
use hypsym::numerics::geomspace;
use hypsym::radial_ode::integrate;
use hypsym::shooting::{default_scan_config, default_scan_grid, find_ground_state, nonexistence_scan, Classification, RESIDUAL_TOL};
use hypsym::variational::{minimize_quotient, GridSpec, MinimizeStatus};
use hypsym::{OdeConfig, ProblemParams, RadialProfile};
use output::{fmt_g, fmt_opt, label, out_dir, row, write_csv, Envelope};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<hypsym::Error> for CliError {
    fn from(e: hypsym::Error) -> Self {
        match e {
            hypsym::Error::Domain(_) | hypsym::Error::Precondition(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult = Result<bool, CliError>;

#[derive(Parser)]
#[command(name = "hypsym", version, about = "Ground states and identity checks for the p-Laplacian on hyperbolic space")]
struct Cli {
    /// File of `key = value` lines used for flags not given on the command line
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Params {
    /// Dimension
    #[arg(long)]
    n: usize,
    /// Exponent of the p-Laplacian
    #[arg(long)]
    p: f64,
    /// Nonlinearity exponent
    #[arg(long)]
    q: f64,
    /// Linear coefficient, in [0, λ_max)
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
}

impl Params {
    fn build(&self) -> Result<ProblemParams, CliError> {
        Ok(ProblemParams::new(self.n, self.p, self.q, self.lambda)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print λ_max, p*, β_λ and α_λ
    Roots {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
    },
    /// Find the ground state (or integrate one trajectory with --alpha) and
    /// write profile.csv and shoot.json
    Shoot {
        #[command(flatten)]
        params: Params,
        /// Integration horizon
        #[arg(long)]
        tmax: Option<f64>,
        /// Relative tolerance of the integrator
        #[arg(long)]
        tol: Option<f64>,
        /// Integrate from this height instead of shooting
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify trajectories of the critical problem and write scan.csv and scan.json
    ScanCritical {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        /// Heights: `a,b,c` or `lo:hi:count` (geometric)
        #[arg(long)]
        alphas: Option<String>,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimise the discrete Rayleigh quotient and write minimize.json and minimizer.csv
    Minimize {
        #[command(flatten)]
        params: Params,
        /// Number of grid points
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        /// Truncation radius
        #[arg(long = "T", default_value_t = 40.0)]
        t_max: f64,
        /// Grid stretching factor
        #[arg(long, default_value_t = 4.0)]
        stretch: f64,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and write verify_<suite>.json
    Verify {
        suite: Suite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Directory holding profile.csv and shoot.json from `shoot` (pohozaev only)
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Monte Carlo samples for the geometry suite
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge every JSON report in a directory into one table
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq, Debug)]
enum Suite {
    Geometry,
    Subsuper,
    Eigen,
    Picone,
    Hardy,
    Pohozaev,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Subsuper => "subsuper",
            Suite::Eigen => "eigen",
            Suite::Picone => "picone",
            Suite::Hardy => "hardy",
            Suite::Pohozaev => "pohozaev",
            Suite::All => "all",
        }
    }
}

fn main() -> ExitCode {
    let args = match config::merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return report_error(e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => report_error(e),
    }
}

fn report_error(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(m) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        CliError::Runtime(m) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Roots { n, p, lambda } => roots(n, p, lambda),
        Command::Shoot { params, tmax, tol, alpha, out } => shoot(params.build()?, tmax, tol, alpha, out),
        Command::ScanCritical { n, p, lambda, alphas, tmax, out } => scan(n, p, lambda, alphas, tmax, out),
        Command::Minimize { params, grid, t_max, stretch, max_iter, out } => {
            minimize(params.build()?, GridSpec { t_max, points: grid, stretch }, max_iter, out)
        }
        Command::Verify { suite, seed, input, samples, out } => verify(suite, seed, input, samples, out),
        Command::Report { input } => report(&input),
    }
}

fn roots(n: usize, p: f64, lambda: f64) -> CliResult {
    let par = ProblemParams::critical(n, p)?.with_lambda(lambda)?;
    let r = decay_roots(&par)?;
    println!("lambda_max={}", fmt_g(lambda_max(n, p)?));
    println!("p_star={}", fmt_g(par.p_star()));
    println!("beta={}", fmt_g(r.beta));
    println!("alpha={}", fmt_g(r.alpha));
    Ok(true)
}

fn ode_config(n: usize, tmax: Option<f64>, tol: Option<f64>, default_tmax: f64) -> Result<OdeConfig, CliError> {
    let mut cfg = OdeConfig::default().with_t_max(tmax.unwrap_or(default_tmax));
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
        cfg.rel_tol = t;
    }
    cfg.validate(n)?;
    Ok(cfg)
}

fn profile_rows(pr: &RadialProfile) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..pr.len()).map(|i| vec![fmt_g(pr.t[i]), fmt_g(pr.u[i]), fmt_g(pr.du[i]), fmt_g(pr.flux[i])])
}

pub const PROFILE_HEADER: [&str; 4] = ["t", "u", "du", "flux"];

fn shoot(par: ProblemParams, tmax: Option<f64>, tol: Option<f64>, alpha: Option<f64>, out: Option<PathBuf>) -> CliResult {
    let dir = out_dir(out)?;
    let b = label(&par);
    let default_tmax = if alpha.is_some() { 20.0 } else { OdeConfig::default().t_max };
    let cfg = ode_config(par.n, tmax, tol, default_tmax)?;
    let inputs = json!({"params": par, "t_max": cfg.t_max, "rel_tol": cfg.rel_tol, "alpha": alpha});
    let (profile, rows, result) = match alpha {
        Some(a) => {
            let tr = integrate(a, &par, &cfg)?;
            let mut rows = Vec::new();
            let mut reports: Vec<PohozaevReport> = Vec::new();
            if par.is_critical() && par.lambda == 0.0 {
                let t_end = *tr.profile.t.last().unwrap();
                for &r in POHOZAEV_RADII.iter().filter(|&&r| r <= t_end) {
                    let rep = pohozaev_residuals(&tr.profile, r)?;
                    let (r1, r2) = rep.relative();
                    rows.push(row(&b, &format!("pohozaev_R{}", fmt_g(r)), rep.passes(POHOZAEV_TOL), r1.max(r2), POHOZAEV_TOL, "max relative residual"));
                    reports.push(rep);
                }
            }
            let result = json!({
                "alpha": tr.alpha,
                "event": tr.event,
                "cross_time": tr.cross_time,
                "t_start_used": tr.t_start_used,
                "t_end": tr.profile.t.last(),
                "steps": tr.steps,
                "warnings": tr.warnings,
                "pohozaev": reports,
            });
            (tr.profile, rows, result)
        }
        None => match find_ground_state(&par, &cfg, None) {
            Ok(gs) => {
                let target = par.roots().alpha;
                let rel = gs.residual_max / gs.residual_scale;
                let rows = vec![
                    row(&b, "decay_rate", (gs.decay.rate - target).abs() <= 1e-3, gs.decay.rate, target, "fitted tail rate vs α_λ, tolerance 1e-3"),
                    row(&b, "ground_state_residual", rel <= RESIDUAL_TOL, rel, RESIDUAL_TOL, "max |R| / max(1, sup g(u))"),
                ];
                let result = json!({
                    "alpha_star": gs.alpha_star,
                    "bracket": gs.bracket,
                    "iterations": gs.iterations,
                    "t_reliable": gs.t_reliable,
                    "sobolev_estimate": gs.sobolev_estimate,
                    "decay": gs.decay,
                    "logderiv_tail": gs.logderiv_tail,
                    "residual_max": gs.residual_max,
                    "residual_scale": gs.residual_scale,
                    "alpha_lambda": target,
                });
                (gs.profile, rows, result)
            }
            Err(e) => {
                let rows = vec![row(&b, "ground_state", false, f64::NAN, f64::NAN, e.to_string())];
                let env = Envelope::new("shoot", inputs, &[], rows, Value::Null);
                env.write(&dir.join("shoot.json"))?;
                eprintln!("no ground state: {e}");
                return Ok(false);
            }
        },
    };
    write_csv(&dir.join("profile.csv"), &PROFILE_HEADER, profile_rows(&profile))?;
    let env = Envelope::new("shoot", inputs, &[], rows, result);
    env.write(&dir.join("shoot.json"))?;
    print!("{}", SuiteReport { seed: 0, rows: env.rows.clone() }.table());
    Ok(env.passed)
}

fn parse_alphas(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--alphas expects `a,b,c` or `lo:hi:count`, got `{spec}`"));
    let grid = if let [lo, hi, count] = spec.split(':').collect::<Vec<_>>()[..] {
        let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && count >= 1) {
            return Err(bad());
        }
        geomspace(lo, hi, count)
    } else {
        spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|a| !(*a > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("--alphas must be positive and strictly increasing".into()));
    }
    Ok(grid)
}

fn scan(n: usize, p: f64, lambda: f64, alphas: Option<String>, tmax: Option<f64>, out: Option<PathBuf>) -> CliResult {
    let dir = out_dir(out)?;
    let par = ProblemParams::critical(n, p)?.with_lambda(lambda)?;
    let grid = match alphas {
        Some(s) => parse_alphas(&s)?,
        None => default_scan_grid(),
    };
    let mut cfg = default_scan_config(n);
    if let Some(t) = tmax {
        cfg = cfg.with_t_max(t);
    }
    cfg.validate(n)?;
    let rep = nonexistence_scan(&par, &grid, &cfg)?;
    write_csv(
        &dir.join("scan.csv"),
        &["alpha", "classification", "cross_time", "logderiv_tail"],
        rep.rows.iter().map(|r| vec![fmt_g(r.alpha), r.classification.as_str().into(), fmt_opt(r.cross_time), fmt_opt(r.logderiv_tail)]),
    )?;
    let b = label(&par);
    let mut rows = Vec::new();
    if lambda == 0.0 {
        rows.push(row(&b, "no_fast_decay", rep.fast_hits == 0, rep.fast_hits as f64, 0.0, "FAST rows and separatrices"));
        let poho: Vec<f64> = rep.rows.iter().filter_map(|r| r.pohozaev.as_ref()).map(|r| r.relative().0.max(r.relative().1)).collect();
        let worst = poho.iter().copied().fold(0.0f64, f64::max);
        rows.push(row(&b, "pohozaev_R5", worst <= POHOZAEV_TOL, worst, POHOZAEV_TOL, format!("{} non-crossing rows", poho.len())));
    } else {
        rows.push(row(&b, "fast_hits", true, rep.fast_hits as f64, 0.0, "informational: λ > 0"));
    }
    let count = |c: Classification| rep.rows.iter().filter(|r| r.classification == c).count();
    let result = json!({
        "counts": {
            "cross": count(Classification::Cross),
            "slow": count(Classification::Slow),
            "fast": count(Classification::Fast),
            "undecided": count(Classification::Undecided),
        },
        "separatrices": rep.separatrices,
        "fast_alphas": rep.fast_alphas(),
    });
    let inputs = json!({"params": par, "alphas": grid, "t_max": cfg.t_max, "rel_tol": cfg.rel_tol});
    let env = Envelope::new("scan-critical", inputs, &[], rows, result);
    env.write(&dir.join("scan.json"))?;
    print!("{}", SuiteReport { seed: 0, rows: env.rows.clone() }.table());
    Ok(env.passed)
}

fn minimize(par: ProblemParams, spec: GridSpec, max_iter: usize, out: Option<PathBuf>) -> CliResult {
    if spec.points < 5 || !(spec.t_max > 0.0) || !(spec.stretch > 0.0) {
        return Err(CliError::Usage("need --grid >= 5, --T > 0 and --stretch > 0".into()));
    }
    let dir = out_dir(out)?;
    let m = minimize_quotient(&par, &spec, max_iter, None)?;
    let f = &m.minimizer;
    write_csv(&dir.join("minimizer.csv"), &["t", "u"], f.t.iter().zip(&f.u).map(|(t, u)| vec![fmt_g(*t), fmt_g(*u)]))?;
    let b = label(&par);
    let rows = vec![row(
        &b,
        "minimizer_converged",
        m.status == MinimizeStatus::Converged,
        m.dual_norm,
        hypsym::variational::FIRST_ORDER_TOL,
        format!("{:?} after {} iterations", m.status, m.iterations),
    )];
    let result = json!({
        "s_estimate": m.s_estimate,
        "iterations": m.iterations,
        "dual_norm": m.dual_norm,
        "status": m.status,
    });
    let inputs = json!({"params": par, "grid": spec, "max_iter": max_iter});
    let env = Envelope::new("minimize", inputs, &[], rows, result);
    env.write(&dir.join("minimize.json"))?;
    println!("S_estimate={}", fmt_g(m.s_estimate));
    Ok(env.passed)
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Re-reads a `shoot --alpha` run and recomputes its Pohozaev residuals.
fn pohozaev_roundtrip(dir: &Path) -> Result<(Vec<SuiteRow>, Vec<u8>, Vec<u8>), CliError> {
    let json_bytes = read_input(&dir.join("shoot.json"))?;
    let csv_bytes = read_input(&dir.join("profile.csv"))?;
    let v: Value = serde_json::from_slice(&json_bytes)?;
    let par: ProblemParams = serde_json::from_value(v["inputs"]["params"].clone())
        .map_err(|e| CliError::Usage(format!("shoot.json has no usable params: {e}")))?;
    let stored: Vec<PohozaevReport> = serde_json::from_value(v["result"]["pohozaev"].clone()).unwrap_or_default();
    if stored.is_empty() {
        return Err(CliError::Usage(
            "shoot.json carries no Pohozaev residuals; write it with `shoot --alpha` at q = p*, λ = 0".into(),
        ));
    }
    let mut rdr = csv::Reader::from_reader(csv_bytes.as_slice());
    let (mut t, mut u, mut du, mut flux) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Runtime(format!("profile.csv: bad field {i} in {rec:?}")))
        };
        t.push(get(0)?);
        u.push(get(1)?);
        du.push(get(2)?);
        flux.push(get(3)?);
    }
    let profile = RadialProfile { t, u, du, flux, params: par };
    let b = label(&par);
    let mut rows = Vec::new();
    for old in &stored {
        let new = pohozaev_residuals(&profile, old.radius)?;
        let d = ((new.res1 - old.res1).abs() / old.scale1)
            .max((new.res2 - old.res2).abs() / old.scale2)
            .max((new.contradiction_term - old.contradiction_term).abs() / old.negativity_scale);
        let r = fmt_g(old.radius);
        rows.push(row(&b, &format!("roundtrip_R{r}"), d <= 1e-12, d, 1e-12, "relative change against the stored values"));
        let (a, c) = new.relative();
        rows.push(row(&b, &format!("pohozaev_R{r}"), new.passes(POHOZAEV_TOL), a.max(c), POHOZAEV_TOL, "max relative residual"));
    }
    Ok((rows, json_bytes, csv_bytes))
}

fn verify(suite: Suite, seed: u64, input: Option<PathBuf>, samples: usize, out: Option<PathBuf>) -> CliResult {
    if input.is_some() && suite != Suite::Pohozaev {
        return Err(CliError::Usage("--in is only accepted by `verify pohozaev`".into()));
    }
    let dir = out_dir(out)?;
    let benchmarks = default_benchmarks();
    let mut extra: Vec<Vec<u8>> = Vec::new();
    let rows = match (suite, &input) {
        (Suite::Pohozaev, Some(d)) => {
            let (rows, j, c) = pohozaev_roundtrip(d)?;
            extra.push(j);
            extra.push(c);
            rows
        }
        _ => {
            let parts: Vec<Suite> = if suite == Suite::All {
                vec![Suite::Geometry, Suite::Subsuper, Suite::Eigen, Suite::Picone, Suite::Hardy, Suite::Pohozaev]
            } else {
                vec![suite]
            };
            let blocks: Vec<Vec<SuiteRow>> = parts
                .par_iter()
                .map(|s| match s {
                    Suite::Geometry => suites::geometry(&benchmarks, samples, seed),
                    Suite::Subsuper => suites::subsuper(&benchmarks),
                    Suite::Eigen => suites::eigen(&benchmarks, seed),
                    Suite::Picone => suites::picone(&benchmarks, seed),
                    Suite::Hardy => suites::hardy(&benchmarks, seed),
                    Suite::Pohozaev => suites::pohozaev(&benchmarks),
                    Suite::All => unreachable!(),
                })
                .collect();
            blocks.into_iter().flatten().collect()
        }
    };
    let inputs = json!({"suite": suite.name(), "seed": seed, "samples": samples, "benchmarks": benchmarks, "in": input.is_some()});
    let extra_refs: Vec<&[u8]> = extra.iter().map(|v| v.as_slice()).collect();
    let env = Envelope::new(&format!("verify {}", suite.name()), inputs, &extra_refs, rows, Value::Null);
    env.write(&dir.join(format!("verify_{}.json", suite.name())))?;
    print!("{}", SuiteReport { seed, rows: env.rows.clone() }.table());
    Ok(env.passed)
}

fn report(dir: &Path) -> CliResult {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no JSON reports in {}", dir.display())));
    }
    let mut rows = Vec::new();
    for f in &files {
        let v: Value = serde_json::from_slice(&fs::read(f)?)?;
        let (Some(cmd), Some(file_rows)) = (v["command"].as_str(), v["rows"].as_array()) else {
            return Err(CliError::Runtime(format!("{}: not a hypsym report", f.display())));
        };
        // NaN values were written as null
        let num = |r: &Value, k: &str| r[k].as_f64().unwrap_or(f64::NAN);
        let text = |r: &Value, k: &str| r[k].as_str().unwrap_or_default().to_string();
        rows.extend(file_rows.iter().map(|r| SuiteRow {
            benchmark: format!("{cmd} {}", text(r, "benchmark")),
            check: text(r, "check"),
            passed: r["passed"].as_bool().unwrap_or(false),
            value: num(r, "value"),
            threshold: num(r, "threshold"),
            note: text(r, "note"),
        }));
    }
    let merged = SuiteReport { seed: 0, rows };
    print!("{}", merged.table());
    let failed = merged.failures().len();
    println!("{} reports, {} checks, {} failed", files.len(), merged.rows.len(), failed);
    Ok(failed == 0)
}
