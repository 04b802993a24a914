//! Shooting on the initial height `α = u(0)`.
//!
//! Trajectories above the ground state cross zero, trajectories below it
//! decay at the slow rate `β_λ`. The separatrix decays at the fast rate
//! `α_λ` and is located by bisection on crossing versus not crossing.

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::identities::{pohozaev_residuals, PohozaevReport};
use crate::numerics::geomspace;
use crate::radial_ode::{integrate, pde_residual, OdeConfig, OdeEvent, RadialProfile, Trajectory};
use crate::variational::weighted_integral;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Half-width of the FAST band as a fraction of `α_λ - β_λ`.
pub const FAST_BAND: f64 = 0.05;
/// Relative agreement of the bracketing trajectories that marks the
/// reliable part of the ground-state profile.
pub const AGREEMENT: f64 = 1e-6;
pub const DEFAULT_BRACKET: (f64, f64) = (0.1, 10.0);
pub const MAX_DOUBLINGS: usize = 60;
pub const BISECTION_RTOL: f64 = 1e-11;
pub const RESIDUAL_TOL: f64 = 1e-5;
pub const DECAY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Cross,
    Slow,
    Fast,
    Undecided,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Cross => "CROSS",
            Self::Slow => "SLOW",
            Self::Fast => "FAST",
            Self::Undecided => "UNDECIDED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub alpha: f64,
    pub classification: Classification,
    pub cross_time: Option<f64>,
    /// Mean of `-u'/u` over the last tenth of the radial range; absent
    /// for crossing trajectories.
    pub logderiv_tail: Option<f64>,
    pub event: OdeEvent,
    pub profile: RadialProfile,
}

/// Mean of `-u'/u` over `[t_a, t_b]` (trapezoid in `t`).
pub fn mean_logderiv(profile: &RadialProfile, t_a: f64, t_b: f64) -> Result<f64> {
    let idx: Vec<usize> = (0..profile.len()).filter(|&i| profile.t[i] >= t_a && profile.t[i] <= t_b).collect();
    if idx.len() < 2 {
        return Err(Error::GridTooShort { needed: 2, got: idx.len() });
    }
    let mut acc = 0.0;
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        let gi = -profile.du[i] / profile.u[i];
        let gj = -profile.du[j] / profile.u[j];
        acc += 0.5 * (profile.t[j] - profile.t[i]) * (gi + gj);
    }
    let span = profile.t[*idx.last().unwrap()] - profile.t[idx[0]];
    Ok(acc / span)
}

/// Band test on a tail log-derivative.
pub fn classify_rate(rate: f64, params: &ProblemParams) -> Classification {
    let r = params.roots();
    let gap = r.alpha - r.beta;
    if (rate - r.alpha).abs() < FAST_BAND * gap {
        Classification::Fast
    } else if rate < 0.5 * (r.alpha + r.beta) {
        Classification::Slow
    } else {
        Classification::Undecided
    }
}

fn report_from(tr: Trajectory, params: &ProblemParams) -> Result<TrajectoryReport> {
    match tr.event {
        OdeEvent::StepUnderflow | OdeEvent::NonFinite | OdeEvent::MaxSteps => {
            return Err(Error::Integration(format!("α = {}: integration stopped with {:?}", tr.alpha, tr.event)))
        }
        _ => {}
    }
    let (classification, logderiv_tail) = if tr.event == OdeEvent::Cross {
        (Classification::Cross, None)
    } else {
        let pr = &tr.profile;
        let (t0, t1) = (pr.t[0], *pr.t.last().unwrap());
        let ld = mean_logderiv(pr, t1 - 0.1 * (t1 - t0), t1)?;
        let c = if tr.event == OdeEvent::Turn { Classification::Undecided } else { classify_rate(ld, params) };
        (c, Some(ld))
    };
    Ok(TrajectoryReport {
        alpha: tr.alpha,
        classification,
        cross_time: tr.cross_time,
        logderiv_tail,
        event: tr.event,
        profile: tr.profile,
    })
}

pub fn classify(alpha: f64, params: &ProblemParams, config: &OdeConfig) -> Result<TrajectoryReport> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("initial height {alpha} must be positive")));
    }
    report_from(integrate(alpha, params, config)?, params)
}

/// Least-squares slope of `-ln u` and the extremes of `u e^{α_λ t}` over
/// `[t_a, t_b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub window: (f64, f64),
}

pub fn decay_fit_window(profile: &RadialProfile, params: &ProblemParams, t_a: f64, t_b: f64) -> Result<DecayFit> {
    let alpha = params.roots().alpha;
    let pts: Vec<(f64, f64)> = (0..profile.len())
        .filter(|&i| profile.t[i] >= t_a && profile.t[i] <= t_b)
        .map(|i| (profile.t[i], profile.u[i]))
        .collect();
    if pts.len() < 3 {
        return Err(Error::GridTooShort { needed: 3, got: pts.len() });
    }
    if pts.iter().any(|&(_, u)| !(u > 0.0)) {
        return Err(Error::Precondition("decay fit needs a positive tail".into()));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| -p.1.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, u) in &pts {
        sxy += (t - tm) * (-u.ln() - ym);
        sxx += (t - tm) * (t - tm);
    }
    let scaled = pts.iter().map(|&(t, u)| (u.ln() + alpha * t).exp());
    let (c_low, c_high) = scaled.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(DecayFit { rate: sxy / sxx, c_low, c_high, window: (pts[0].0, pts[pts.len() - 1].0) })
}

/// Fit over the second half of the profile; rejects rates farther than
/// `DECAY_TOL` from `α_λ`.
pub fn decay_fit(profile: &RadialProfile, params: &ProblemParams) -> Result<DecayFit> {
    let t_end = *profile.t.last().unwrap();
    let fit = decay_fit_window(profile, params, 0.5 * t_end, t_end)?;
    let alpha = params.roots().alpha;
    if (fit.rate - alpha).abs() > DECAY_TOL {
        return Err(Error::Residual(format!("decay rate {} differs from α_λ = {alpha}", fit.rate)));
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub alpha_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// End of the reliable part of the profile.
    pub t_reliable: f64,
    pub profile: RadialProfile,
    /// `(∫ U^q dV)^{(q-p)/q}`, the quotient value of a ground state.
    pub sobolev_estimate: f64,
    pub decay: DecayFit,
    pub logderiv_tail: f64,
    pub residual_max: f64,
    /// `max(1, sup |λu^{p-1} + u^{q-1}|)`; the residual gate is relative to it.
    pub residual_scale: f64,
}

impl GroundState {
    pub fn decay_constants(&self) -> (f64, f64) {
        (self.decay.c_low, self.decay.c_high)
    }
}

fn crosses(alpha: f64, params: &ProblemParams, config: &OdeConfig) -> Result<(bool, Trajectory)> {
    let tr = integrate(alpha, params, config)?;
    match tr.event {
        OdeEvent::Cross => Ok((true, tr)),
        OdeEvent::ReachedEnd | OdeEvent::Turn => Ok((false, tr)),
        e => Err(Error::Integration(format!("α = {alpha}: integration stopped with {e:?}"))),
    }
}

/// Result of bisecting between a non-crossing and a crossing height.
#[derive(Debug, Clone)]
pub struct Separatrix {
    pub lo: Trajectory,
    pub hi: Trajectory,
    pub mid: Trajectory,
    pub iterations: usize,
    pub t_reliable: f64,
}

/// Bisects `[lo, hi]` (non-crossing at `lo`, crossing at `hi`) to
/// `|hi - lo| ≤ BISECTION_RTOL · hi`.
pub fn bisect_separatrix(lo: f64, hi: f64, params: &ProblemParams, config: &OdeConfig) -> Result<Separatrix> {
    let (c_lo, mut tr_lo) = crosses(lo, params, config)?;
    let (c_hi, mut tr_hi) = crosses(hi, params, config)?;
    if c_lo || !c_hi {
        return Err(Error::Bracket(format!("[{lo}, {hi}] does not bracket a crossing change")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    while hi - lo > BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (c, tr) = crosses(mid, params, config)?;
        if c {
            hi = mid;
            tr_hi = tr;
        } else {
            lo = mid;
            tr_lo = tr;
        }
        iterations += 1;
    }
    let (_, mid) = crosses(0.5 * (lo + hi), params, config)?;
    let t_reliable = agreement_radius(&tr_lo.profile, &tr_hi.profile, &mid.profile);
    Ok(Separatrix { lo: tr_lo, hi: tr_hi, mid, iterations, t_reliable })
}

/// Last node of `mid` up to which the two bracketing profiles agree to
/// `AGREEMENT` relative.
fn agreement_radius(a: &RadialProfile, b: &RadialProfile, mid: &RadialProfile) -> f64 {
    let end = a.t.last().unwrap().min(*b.t.last().unwrap());
    let mut last = mid.t[0];
    for &t in &mid.t {
        if t > end {
            break;
        }
        let (ua, ub) = (a.value_at(t), b.value_at(t));
        if (ua - ub).abs() > AGREEMENT * ua.abs().max(ub.abs()) {
            break;
        }
        last = t;
    }
    last
}

/// Classification map gathered while expanding a bracket, for diagnostics.
fn describe(map: &[(f64, bool)]) -> String {
    map.iter()
        .map(|(a, c)| format!("{a:.6e}:{}", if *c { "CROSS" } else { "NO-CROSS" }))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Auto-bracketing, bisection, truncation to the reliable window and the
/// residual, decay and log-derivative checks.
pub fn find_ground_state(params: &ProblemParams, config: &OdeConfig, bracket: Option<(f64, f64)>) -> Result<GroundState> {
    let (mut lo, mut hi) = bracket.unwrap_or(DEFAULT_BRACKET);
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!("bad bracket ({lo}, {hi})")));
    }
    let mut map = Vec::new();
    let mut doublings = 0;
    loop {
        let (c_lo, _) = crosses(lo, params, config)?;
        map.push((lo, c_lo));
        if !c_lo {
            break;
        }
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Bracket(format!("no non-crossing height found: {}", describe(&map))));
        }
        hi = lo;
        lo *= 0.5;
    }
    loop {
        let (c_hi, _) = crosses(hi, params, config)?;
        map.push((hi, c_hi));
        if c_hi {
            break;
        }
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::Bracket(format!("no crossing height found: {}", describe(&map))));
        }
        lo = hi;
        hi *= 2.0;
    }
    let sep = bisect_separatrix(lo, hi, params, config)?;
    let alpha_star = sep.mid.alpha;
    let t_rel = sep.t_reliable;
    if t_rel < 1.0 {
        return Err(Error::Residual(format!(
            "bracketing trajectories separate at t = {t_rel}; no decaying separatrix resolved"
        )));
    }
    let profile = sep.mid.profile.truncate(t_rel)?;
    let residual_max = pde_residual(&profile)?.max_abs;
    let residual_scale = profile.u.iter().fold(1.0f64, |m, &u| m.max(params.nonlinearity(u).abs()));
    if residual_max > RESIDUAL_TOL * residual_scale {
        return Err(Error::Residual(format!(
            "ground-state residual {residual_max} exceeds {RESIDUAL_TOL} x {residual_scale}"
        )));
    }
    let decay = decay_fit(&profile, params)?;
    let logderiv_tail = mean_logderiv(&profile, 0.5 * t_rel, t_rel)?;
    let sobolev_estimate = sobolev_from_profile(&profile, params)?;
    Ok(GroundState {
        alpha_star,
        bracket: (sep.lo.alpha, sep.hi.alpha),
        iterations: sep.iterations,
        t_reliable: t_rel,
        profile,
        sobolev_estimate,
        decay,
        logderiv_tail,
        residual_max,
        residual_scale,
    })
}

/// `(∫ U^q dV)^{(q-p)/q}`, adding the series contribution of `[0, t_0]`.
pub fn sobolev_from_profile(profile: &RadialProfile, params: &ProblemParams) -> Result<f64> {
    let mut i = weighted_integral(&profile.u, params.q, &profile.t, params.n)?;
    let t0 = profile.t[0];
    if t0 > 0.0 {
        let n = params.n as f64;
        i += crate::numerics::sphere_area(params.n) * profile.u[0].powf(params.q) * t0.powf(n) / n;
    }
    Ok(i.powf((params.q - params.p) / params.q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub classification: Classification,
    pub cross_time: Option<f64>,
    pub logderiv_tail: Option<f64>,
    pub pohozaev: Option<PohozaevReport>,
}

/// A located SLOW/CROSS transition and the class of its separatrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatrixRow {
    pub alpha: f64,
    pub t_reliable: f64,
    pub logderiv: Option<f64>,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub params: ProblemParams,
    pub rows: Vec<ScanRow>,
    pub separatrices: Vec<SeparatrixRow>,
    pub fast_hits: usize,
}

impl ScanReport {
    pub fn fast_alphas(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.classification == Classification::Fast)
            .map(|r| r.alpha)
            .chain(self.separatrices.iter().filter(|s| s.classification == Classification::Fast).map(|s| s.alpha))
            .collect()
    }
}

pub const SCAN_T_MAX: f64 = 60.0;
pub const POHOZAEV_RADIUS: f64 = 5.0;

pub fn default_scan_grid() -> Vec<f64> {
    geomspace(1e-4, 1e4, 200)
}

pub fn default_scan_config(n: usize) -> OdeConfig {
    let t_max = SCAN_T_MAX.min(700.0 / (n as f64 - 1.0).max(1.0));
    OdeConfig::default().with_t_max(t_max)
}

/// Classifies every height on the grid. Each adjacent non-crossing /
/// crossing pair is refined to its separatrix, which is classified over
/// its reliable window. Non-crossing rows carry Pohozaev residuals at
/// `R = 5` when `λ = 0`.
pub fn nonexistence_scan(params: &ProblemParams, alpha_grid: &[f64], config: &OdeConfig) -> Result<ScanReport> {
    if !params.is_critical() {
        return Err(Error::Precondition("scan requires q = p*".into()));
    }
    let rows: Vec<ScanRow> = alpha_grid
        .par_iter()
        .map(|&a| -> Result<ScanRow> {
            let rep = classify(a, params, config)?;
            let pohozaev = if params.lambda == 0.0
                && rep.classification != Classification::Cross
                && *rep.profile.t.last().unwrap() >= POHOZAEV_RADIUS
            {
                Some(pohozaev_residuals(&rep.profile, POHOZAEV_RADIUS)?)
            } else {
                None
            };
            Ok(ScanRow {
                alpha: a,
                classification: rep.classification,
                cross_time: rep.cross_time,
                logderiv_tail: rep.logderiv_tail,
                pohozaev,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = rows
        .windows(2)
        .filter(|w| (w[0].classification == Classification::Cross) != (w[1].classification == Classification::Cross))
        .map(|w| {
            if w[1].classification == Classification::Cross {
                (w[0].alpha, w[1].alpha)
            } else {
                (w[1].alpha, w[0].alpha)
            }
        })
        .collect();
    let separatrices = pairs
        .par_iter()
        .map(|&(lo, hi)| -> Result<SeparatrixRow> {
            let sep = bisect_separatrix(lo, hi, params, config)?;
            let t_rel = sep.t_reliable;
            let logderiv = if t_rel > 2.0 * sep.mid.profile.t[0] {
                mean_logderiv(&sep.mid.profile, 0.5 * t_rel, t_rel).ok()
            } else {
                None
            };
            let classification = match logderiv {
                Some(ld) if t_rel >= 10.0 => classify_rate(ld, params),
                _ => Classification::Undecided,
            };
            Ok(SeparatrixRow { alpha: sep.mid.alpha, t_reliable: t_rel, logderiv, classification })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ScanReport { params: *params, rows, separatrices, fast_hits: 0 };
    report.fast_hits = report.fast_alphas().len();
    Ok(report)
}
