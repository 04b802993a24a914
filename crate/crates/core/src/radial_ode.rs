//! Radial reduction in geodesic polar coordinates.
//!
//! With `s(t) = sinh t` and the flux `F = s^{n-1}|u'|^{p-2}u'` the equation
//! becomes the first-order system
//!
//! ```text
//! F' = -s^{n-1} (λ|u|^{p-2}u + |u|^{q-2}u)
//! u' = sign(F) (|F| / s^{n-1})^{1/(p-1)}
//! ```
//!
//! which stays regular where `u'` vanishes. The power relation is evaluated
//! in log space so `s^{n-1}` never has to be formed for large `t`.

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::numerics::{hermite, ln_sinh};
use crate::report::ResidualReport;
use serde::{Deserialize, Serialize};

/// Relative drop `(α - u(t_start))/α` allowed for the series handoff.
pub const SERIES_DROP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    /// Upper bound for the series handoff radius.
    pub t_start: f64,
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Largest step; also sets the density of the stored grid.
    pub h_max: f64,
    /// Largest step relative to `t`, for resolving the start region.
    pub h_rel: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            t_start: 1e-3,
            t_max: 40.0,
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_steps: 2_000_000,
            h_max: 2e-3,
            h_rel: 0.02,
        }
    }
}

impl OdeConfig {
    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.t_start > 0.0 && self.t_start < self.t_max) {
            return Err(Error::Domain("need 0 < t_start < t_max".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.h_max > 0.0 && self.h_rel > 0.0) {
            return Err(Error::Domain("tolerances and step bounds must be positive".into()));
        }
        if (n as f64 - 1.0) * self.t_max > 700.0 {
            return Err(Error::Domain(format!(
                "(n-1) t_max = {} exceeds 700; sinh^(n-1) would overflow",
                (n as f64 - 1.0) * self.t_max
            )));
        }
        Ok(())
    }
}

/// A radial function on a strictly increasing grid of geodesic radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub flux: Vec<f64>,
    pub params: ProblemParams,
}

/// `sign(F) (|F| / sinh(t)^{n-1})^{1/(p-1)}`.
pub fn du_from_flux(t: f64, flux: f64, n: usize, p: f64) -> f64 {
    if flux == 0.0 {
        return 0.0;
    }
    flux.signum() * ((flux.abs().ln() - (n as f64 - 1.0) * ln_sinh(t)) / (p - 1.0)).exp()
}

/// `sinh(t)^{n-1} |u'|^{p-2} u'`.
pub fn flux_from_du(t: f64, du: f64, n: usize, p: f64) -> f64 {
    if du == 0.0 {
        return 0.0;
    }
    du.signum() * ((n as f64 - 1.0) * ln_sinh(t) + (p - 1.0) * du.abs().ln()).exp()
}

impl RadialProfile {
    /// Builds a profile from values and derivatives; the flux is derived.
    pub fn from_derivatives(t: Vec<f64>, u: Vec<f64>, du: Vec<f64>, params: ProblemParams) -> Result<Self> {
        let flux = t.iter().zip(&du).map(|(&ti, &d)| flux_from_du(ti, d, params.n, params.p)).collect();
        let p = Self { t, u, du, flux, params };
        p.check_shape()?;
        Ok(p)
    }

    /// Builds a profile from values and flux; derivatives are derived.
    pub fn from_flux(t: Vec<f64>, u: Vec<f64>, flux: Vec<f64>, params: ProblemParams) -> Result<Self> {
        let du = t.iter().zip(&flux).map(|(&ti, &f)| du_from_flux(ti, f, params.n, params.p)).collect();
        let p = Self { t, u, du, flux, params };
        p.check_shape()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn check_shape(&self) -> Result<()> {
        let n = self.t.len();
        for len in [self.u.len(), self.du.len(), self.flux.len()] {
            if len != n {
                return Err(Error::Misaligned(n, len));
            }
        }
        if n < 2 {
            return Err(Error::GridTooShort { needed: 2, got: n });
        }
        if self.t[0] < 0.0 || self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("grid must be nonnegative and strictly increasing".into()));
        }
        Ok(())
    }

    /// Shape, monotone grid, flux/derivative sign and power-relation checks.
    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        let (n, p) = (self.params.n, self.params.p);
        for i in 0..self.len() {
            let (t, d, f) = (self.t[i], self.du[i], self.flux[i]);
            if d != 0.0 && f != 0.0 && d.signum() != f.signum() {
                return Err(Error::Precondition(format!("flux and derivative signs differ at t = {t}")));
            }
            if t > 0.0 {
                let rec = du_from_flux(t, f, n, p);
                let tol = 1e-10 * (1.0 + f.abs().ln().abs() / 100.0);
                if (rec - d).abs() > tol * d.abs() && (rec - d).abs() > 1e-300 {
                    return Err(Error::Precondition(format!("power relation fails at t = {t}")));
                }
            }
        }
        Ok(())
    }

    /// Value at `t` by cubic Hermite interpolation on `(u, u')`.
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.segment(t);
        hermite(self.t[k], self.u[k], self.du[k], self.t[k + 1], self.u[k + 1], self.du[k + 1], t)
    }

    /// Flux at `t` by cubic Hermite interpolation on `(F, F')`.
    pub fn flux_at(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let d0 = self.flux_slope(k);
        let d1 = self.flux_slope(k + 1);
        hermite(self.t[k], self.flux[k], d0, self.t[k + 1], self.flux[k + 1], d1, t)
    }

    fn flux_slope(&self, i: usize) -> f64 {
        let n1 = self.params.n as f64 - 1.0;
        -(n1 * ln_sinh(self.t[i])).exp() * self.params.nonlinearity(self.u[i])
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.t.len();
        match self.t.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        }
    }

    /// Restriction to `t ≤ t_end`, with an interpolated node at `t_end`.
    pub fn truncate(&self, t_end: f64) -> Result<Self> {
        if !(t_end > self.t[0]) {
            return Err(Error::Precondition(format!("t_end = {t_end} precedes the grid")));
        }
        let t_end = t_end.min(*self.t.last().unwrap());
        let mut t = Vec::new();
        let mut u = Vec::new();
        let mut flux = Vec::new();
        for i in 0..self.len() {
            if self.t[i] < t_end * (1.0 - 1e-14) {
                t.push(self.t[i]);
                u.push(self.u[i]);
                flux.push(self.flux[i]);
            }
        }
        t.push(t_end);
        u.push(self.value_at(t_end));
        flux.push(self.flux_at(t_end));
        if t.len() < 2 {
            return Err(Error::GridTooShort { needed: 2, got: t.len() });
        }
        let mut du: Vec<f64> = self.du[..t.len() - 1].to_vec();
        du.push(du_from_flux(t_end, *flux.last().unwrap(), self.params.n, self.params.p));
        let out = Self { t, u, du, flux, params: self.params };
        out.check_shape()?;
        Ok(out)
    }
}

/// Leading-order state at `t` for the initial value `u(0) = α, u'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesState {
    pub t: f64,
    pub u: f64,
    pub du: f64,
    pub flux: f64,
}

fn series_k(alpha: f64, params: &ProblemParams) -> f64 {
    params.lambda * alpha.powf(params.p - 1.0) + alpha.powf(params.q - 1.0)
}

/// `K = λα^{p-1} + α^{q-1}`, `F ≈ -K t^n/n`,
/// `u' ≈ -(K/n)^{1/(p-1)} t^{1/(p-1)}`,
/// `u ≈ α - ((p-1)/p)(K/n)^{1/(p-1)} t^{p/(p-1)}`.
pub fn series_start(alpha: f64, params: &ProblemParams, t_start: f64) -> Result<SeriesState> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("initial height {alpha} must be positive")));
    }
    if !(t_start > 0.0) {
        return Err(Error::Domain("t_start must be positive".into()));
    }
    let (n, p) = (params.n as f64, params.p);
    let k = series_k(alpha, params);
    let c = (k / n).powf(1.0 / (p - 1.0));
    Ok(SeriesState {
        t: t_start,
        u: alpha - (p - 1.0) / p * c * t_start.powf(p / (p - 1.0)),
        du: -c * t_start.powf(1.0 / (p - 1.0)),
        flux: -k * t_start.powf(n) / n,
    })
}

/// Handoff radius: `t_start`, shrunk so the series drop stays below
/// `SERIES_DROP · α` (tall data concentrates at small radii).
pub fn effective_t_start(alpha: f64, params: &ProblemParams, t_start: f64) -> f64 {
    if !(alpha > 0.0) {
        return t_start;
    }
    let p = params.p;
    let k = series_k(alpha, params);
    let c = (p - 1.0) / p * (k / params.n as f64).powf(1.0 / (p - 1.0));
    let t_drop = (SERIES_DROP * alpha / c).powf((p - 1.0) / p);
    t_start.min(t_drop)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OdeEvent {
    /// `u` reached zero.
    Cross,
    /// The flux reached zero: `u` stopped decreasing.
    Turn,
    ReachedEnd,
    StepUnderflow,
    NonFinite,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub alpha: f64,
    pub profile: RadialProfile,
    pub event: OdeEvent,
    pub cross_time: Option<f64>,
    pub t_start_used: f64,
    pub steps: usize,
    pub warnings: Vec<String>,
}

struct Rhs<'a> {
    params: &'a ProblemParams,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: [f64; 2]) -> [f64; 2] {
        let (n, p) = (self.params.n, self.params.p);
        let ls = (n as f64 - 1.0) * ln_sinh(t);
        let du = if y[1] == 0.0 {
            0.0
        } else {
            y[1].signum() * ((y[1].abs().ln() - ls) / (p - 1.0)).exp()
        };
        [du, -ls.exp() * self.params.nonlinearity(y[0])]
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 6] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from the series handoff until `u` crosses zero, the flux
/// turns, or `t_max` is reached. Every accepted step is stored.
pub fn integrate(alpha: f64, params: &ProblemParams, config: &OdeConfig) -> Result<Trajectory> {
    config.validate(params.n)?;
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::Domain(format!("initial height {alpha} must be finite and nonnegative")));
    }
    let mut warnings = Vec::new();
    if config.t_start > 1e-2 {
        warnings.push(format!("t_start = {} exceeds 1e-2; series start is inaccurate", config.t_start));
    }
    let (n, p) = (params.n, params.p);
    let t0 = effective_t_start(alpha, params, config.t_start);
    let start = if alpha == 0.0 {
        SeriesState { t: t0, u: 0.0, du: 0.0, flux: 0.0 }
    } else {
        series_start(alpha, params, t0)?
    };
    let rhs = Rhs { params };
    let eps_flux = 1e-14 * start.flux.abs();

    let mut ts = vec![start.t];
    let mut us = vec![start.u];
    let mut fs = vec![start.flux];
    let mut dus = vec![du_from_flux(start.t, start.flux, n, p)];

    let mut t = start.t;
    let mut y = [start.u, start.flux];
    let mut k1 = rhs.eval(t, y);
    let mut h = (config.h_rel * t).min(config.h_max);
    let mut steps = 0usize;
    let mut event = OdeEvent::ReachedEnd;
    let mut cross_time = None;

    while t < config.t_max {
        if steps >= config.max_steps {
            event = OdeEvent::MaxSteps;
            break;
        }
        h = h.min(config.h_max).min(config.h_rel * t).min(config.t_max - t);
        if h <= 1e-15 * t {
            event = OdeEvent::StepUnderflow;
            break;
        }
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 1..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                for c in 0..2 {
                    ys[c] += h * A[s][j] * kj[c];
                }
            }
            k[s] = rhs.eval(t + C[s] * h, ys);
        }
        let mut ynew = y;
        for c in 0..2 {
            for j in 0..6 {
                ynew[c] += h * A[6][j] * k[j][c];
            }
        }
        // seventh stage doubles as the next first stage
        k[6] = rhs.eval(t + h, ynew);
        let mut err = 0.0f64;
        for c in 0..2 {
            let mut e = 0.0;
            for j in 0..7 {
                e += h * E[j] * k[j][c];
            }
            let sc = config.abs_tol + config.rel_tol * y[c].abs().max(ynew[c].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() || !ynew[0].is_finite() || !ynew[1].is_finite() {
            if h <= 1e-12 * t.max(1.0) {
                event = OdeEvent::NonFinite;
                break;
            }
            h *= 0.1;
            continue;
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.1);
            continue;
        }
        steps += 1;
        let t_new = t + h;
        let du_old = k1[0];
        let du_new = k[6][0];
        if ynew[0] <= 0.0 && y[0] > 0.0 {
            let g = |s: f64| hermite(t, y[0], du_old, t_new, ynew[0], du_new, s);
            let tc = crate::numerics::bisect(g, t, t_new, 1e-12 * t_new.max(1.0)).unwrap_or(t_new);
            if tc > t {
                let fc = hermite(t, y[1], k1[1], t_new, ynew[1], k[6][1], tc);
                ts.push(tc);
                us.push(0.0);
                fs.push(fc);
                dus.push(du_from_flux(tc, fc, n, p));
            }
            cross_time = Some(tc);
            event = OdeEvent::Cross;
            break;
        }
        ts.push(t_new);
        us.push(ynew[0]);
        fs.push(ynew[1]);
        dus.push(du_new);
        if alpha > 0.0 && ynew[1] >= -eps_flux {
            event = OdeEvent::Turn;
            break;
        }
        t = t_new;
        y = ynew;
        k1 = k[6];
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    let profile = RadialProfile { t: ts, u: us, du: dus, flux: fs, params: *params };
    Ok(Trajectory { alpha, profile, event, cross_time, t_start_used: t0, steps, warnings })
}

/// Weights of the derivative at `x[i]` of the Lagrange interpolant through `x`.
fn lagrange_derivative_weights(x: &[f64], i: usize) -> Vec<f64> {
    let m = x.len();
    let mut w = vec![0.0; m];
    for j in 0..m {
        if j == i {
            w[j] = (0..m).filter(|&k| k != i).map(|k| 1.0 / (x[i] - x[k])).sum();
        } else {
            let num: f64 = (0..m).filter(|&k| k != i && k != j).map(|k| x[i] - x[k]).product();
            let den: f64 = (0..m).filter(|&k| k != j).map(|k| x[j] - x[k]).product();
            w[j] = num / den;
        }
    }
    w
}

/// `R = -F'/sinh^{n-1} - λu^{p-1} - u^{q-1}` with `F'` from centred
/// five-point differences of the stored flux; two nodes at each end are
/// excluded.
pub fn pde_residual(profile: &RadialProfile) -> Result<ResidualReport> {
    let m = profile.len();
    if m < 5 {
        return Err(Error::GridTooShort { needed: 5, got: m });
    }
    if !(profile.t[0] > 0.0) {
        return Err(Error::Precondition("pde_residual needs t_0 > 0".into()));
    }
    let n1 = profile.params.n as f64 - 1.0;
    let mut grid = Vec::with_capacity(m - 4);
    let mut res = Vec::with_capacity(m - 4);
    for i in 2..m - 2 {
        let w = lagrange_derivative_weights(&profile.t[i - 2..i + 3], 2);
        let df: f64 = (0..5).map(|j| w[j] * profile.flux[i - 2 + j]).sum();
        let t = profile.t[i];
        let r = -df * (-n1 * ln_sinh(t)).exp() - profile.params.nonlinearity(profile.u[i]);
        grid.push(t);
        res.push(r);
    }
    Ok(ResidualReport::new(grid, res, None))
}

/// Residuals of the half-space eigen-ODE and of its linearisation for
/// `w(t) = t^a`, normalised by `w^{p-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceEigenReport {
    pub exponent: f64,
    /// `[-t^n (t^{p-n} (w')^{p-1})' - λ w^{p-1}] / w^{p-1}`.
    pub equation: ResidualReport,
    /// `[-t^n (t^{p-n} (w')^{p-2} (tw')')' - λ w^{p-2}(tw')] / w^{p-1}`.
    pub linearized: ResidualReport,
}

/// Both residuals follow from the power rule; each equals a multiple of
/// `f(a) - λ`.
pub fn halfspace_eigen_residual(w_exponent: f64, params: &ProblemParams, t_grid: &[f64]) -> Result<HalfspaceEigenReport> {
    if !(w_exponent > 0.0) {
        return Err(Error::Domain("exponent must be positive".into()));
    }
    if t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("grid must be positive".into()));
    }
    let (n, p, lam, a) = (params.n as f64, params.p, params.lambda, w_exponent);
    // t^{p-n} (w')^{p-1} = a^{p-1} t^{e}
    let e = p - n + (a - 1.0) * (p - 1.0);
    let wp = a * (p - 1.0);
    let mut eq = Vec::with_capacity(t_grid.len());
    let mut lin = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let norm = t.powf(wp);
        // -t^n d/dt[a^{p-1} t^e] = -a^{p-1} e t^{n+e-1}
        let lhs = -a.powf(p - 1.0) * e * t.powf(n + e - 1.0);
        let rhs = lam * t.powf(a * (p - 1.0));
        eq.push((lhs - rhs) / norm);
        // t^{p-n} (w')^{p-2} (tw')' = a^p t^e
        let lhs_l = -a.powf(p) * e * t.powf(n + e - 1.0);
        // w^{p-2} (t w') = a t^{a(p-1)}
        let rhs_l = lam * a * t.powf(a * (p - 1.0));
        lin.push((lhs_l - rhs_l) / norm);
    }
    Ok(HalfspaceEigenReport {
        exponent: a,
        equation: ResidualReport::new(t_grid.to_vec(), eq, None),
        linearized: ResidualReport::new(t_grid.to_vec(), lin, None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::geomspace;
    use proptest::prelude::*;

    fn pp(n: usize, p: f64, q: f64, l: f64) -> ProblemParams {
        ProblemParams::new(n, p, q, l).unwrap()
    }

    #[test]
    fn series_signs_and_scaling() {
        for &(n, p, q, l) in &[(3, 2.0, 4.0, 0.0), (4, 3.0, 5.0, 0.5), (3, 1.5, 2.5, 0.3)] {
            let par = pp(n, p, q, l);
            let a = 1.7;
            let s1 = series_start(a, &par, 1e-3).unwrap();
            let s2 = series_start(a, &par, 5e-4).unwrap();
            assert!(s1.du < 0.0 && s1.u < a && s1.flux < 0.0);
            let ratio = (s2.u - a) / (s1.u - a);
            assert!((ratio - 0.5f64.powf(p / (p - 1.0))).abs() < 1e-8);
        }
        assert!(series_start(0.0, &pp(3, 2.0, 4.0, 0.0), 1e-3).is_err());
    }

    #[test]
    fn series_matches_quadratic_expansion() {
        let s = series_start(1.0, &pp(3, 2.0, 4.0, 0.0), 1e-2).unwrap();
        assert!((s.u - (1.0 - 1e-4 / 6.0)).abs() < 1e-15);
    }

    // Independent oracle: fixed-step RK4 on u'' + 2 coth(t) u' + u^3 = 0
    // from t = 1e-6 (u = 1 - t²/6 there) to t = 1e-2.
    #[test]
    fn series_agrees_with_fine_fixed_step_solution() {
        let (mut t, h) = (1e-6f64, 1e-7f64);
        let mut y = [1.0 - t * t / 6.0, -t / 3.0];
        let f = |t: f64, y: [f64; 2]| [y[1], -2.0 / t.tanh() * y[1] - y[0].powi(3)];
        while t < 1e-2 - 1e-12 {
            let k1 = f(t, y);
            let k2 = f(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for c in 0..2 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            t += h;
        }
        let s = series_start(1.0, &pp(3, 2.0, 4.0, 0.0), t).unwrap();
        assert!((s.u - y[0]).abs() < 1e-8, "{} vs {}", s.u, y[0]);
    }

    #[test]
    fn zero_height_stays_zero() {
        let tr = integrate(0.0, &pp(3, 2.0, 4.0, 0.0), &OdeConfig::default().with_t_max(5.0)).unwrap();
        assert_eq!(tr.event, OdeEvent::ReachedEnd);
        assert!(tr.profile.u.iter().all(|&u| u == 0.0));
        assert!((tr.profile.t.last().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn tall_data_crosses() {
        let tr = integrate(1e3, &pp(3, 2.0, 4.0, 0.0), &OdeConfig::default()).unwrap();
        assert_eq!(tr.event, OdeEvent::Cross);
        let tc = tr.cross_time.unwrap();
        assert!(tc > 0.0 && tc < 1.0);
        assert_eq!(*tr.profile.u.last().unwrap(), 0.0);
        assert!((tr.profile.t.last().unwrap() - tc).abs() < 1e-15);
    }

    // Brute oracle for the crossing time: fixed-step RK4 on the flux system.
    #[test]
    fn crossing_time_matches_fixed_step_oracle() {
        let par = pp(3, 2.0, 4.0, 0.0);
        let tr = integrate(20.0, &par, &OdeConfig::default()).unwrap();
        let tc = tr.cross_time.unwrap();
        let s = series_start(20.0, &par, 1e-4).unwrap();
        let f = |t: f64, y: [f64; 2]| {
            let sh = t.sinh();
            [y[1] / (sh * sh), -sh * sh * y[0].powi(3)]
        };
        let (mut t, h) = (s.t, 1e-6f64);
        let mut y = [s.u, s.flux];
        let mut prev;
        loop {
            prev = (t, y[0]);
            let k1 = f(t, y);
            let k2 = f(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for c in 0..2 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            t += h;
            if y[0] <= 0.0 {
                break;
            }
        }
        let oracle = prev.0 + (t - prev.0) * prev.1 / (prev.1 - y[0]);
        assert!((tc - oracle).abs() < 1e-5, "{tc} vs {oracle}");
    }

    #[test]
    fn trajectory_invariants() {
        for &(n, p, q, l, a) in &[
            (3, 2.0, 4.0, 0.0, 1.0),
            (3, 2.0, 4.0, 0.75, 2.0),
            (4, 3.0, 5.0, 0.5, 0.7),
            (3, 1.5, 2.5, 0.2, 1.2),
        ] {
            let par = pp(n, p, q, l);
            let tr = integrate(a, &par, &OdeConfig::default().with_t_max(20.0)).unwrap();
            let prof = &tr.profile;
            prof.validate().unwrap();
            let end = prof.len() - if tr.event == OdeEvent::Cross { 1 } else { 0 };
            for i in 1..end {
                assert!(prof.u[i] < prof.u[i - 1], "not decreasing at {}", prof.t[i]);
                assert!(prof.du[i] < 0.0);
            }
        }
    }

    // Independent quadrature oracle: F(t) = F(t0) - ∫ sinh^{n-1} g(u).
    #[test]
    fn flux_matches_trapezoid_quadrature() {
        for &(n, p, q, l, a) in &[(3, 2.0, 4.0, 0.0, 2.0), (4, 3.0, 5.0, 0.5, 1.0), (3, 1.5, 2.5, 0.2, 1.0)] {
            let par = pp(n, p, q, l);
            let tr = integrate(a, &par, &OdeConfig { h_max: 5e-4, ..OdeConfig::default() }.with_t_max(6.0)).unwrap();
            let pr = &tr.profile;
            let g: Vec<f64> = (0..pr.len())
                .map(|i| pr.t[i].sinh().powi(n as i32 - 1) * par.nonlinearity(pr.u[i]))
                .collect();
            let mut acc = 0.0;
            let scale = pr.flux.iter().fold(0.0f64, |m, f| m.max(f.abs()));
            for i in 1..pr.len() {
                acc += 0.5 * (pr.t[i] - pr.t[i - 1]) * (g[i] + g[i - 1]);
                let pred = pr.flux[0] - acc;
                assert!((pred - pr.flux[i]).abs() <= 1e-7 * scale.max(1.0), "t={} {} {}", pr.t[i], pred, pr.flux[i]);
            }
        }
    }

    #[test]
    fn tolerance_refinement_converges() {
        let par = pp(3, 2.0, 4.0, 0.5);
        let cfg = OdeConfig::default().with_t_max(10.0);
        let a = integrate(1.0, &par, &OdeConfig { rel_tol: 1e-8, ..cfg }).unwrap().profile;
        let b = integrate(1.0, &par, &OdeConfig { rel_tol: 5e-9, ..cfg }).unwrap().profile;
        let (ua, ub) = (a.value_at(5.0), b.value_at(5.0));
        assert!((ua - ub).abs() < 10.0 * 1e-8 * ua.abs());
    }

    #[test]
    fn residual_of_constant_profile() {
        let par = pp(3, 2.0, 4.0, 0.5);
        let t = geomspace(0.1, 5.0, 50);
        let c = 0.8;
        let prof = RadialProfile::from_flux(t.clone(), vec![c; 50], vec![0.0; 50], par).unwrap();
        let rep = pde_residual(&prof).unwrap();
        let expected = -0.5 * c - c.powi(3);
        assert!(rep.pointwise.iter().all(|r| (r - expected).abs() < 1e-15));
        assert_eq!(rep.grid.len(), 46);
    }

    #[test]
    fn residual_detects_a_spike() {
        let par = pp(3, 2.0, 4.0, 0.0);
        let tr = integrate(1.0, &par, &OdeConfig::default().with_t_max(8.0)).unwrap();
        let mut prof = tr.profile.clone();
        let base = pde_residual(&prof).unwrap().max_abs;
        let k = prof.len() / 3;
        prof.u[k] *= 1.01;
        let rep = pde_residual(&prof).unwrap();
        let spike = rep.pointwise[k - 2].abs();
        assert!(spike > 10.0 * base.max(1e-12), "{spike} vs {base}");
        assert!(base < 1e-5);
    }

    #[test]
    fn residual_rejects_short_grids() {
        let par = pp(3, 2.0, 4.0, 0.5);
        let prof = RadialProfile::from_flux(vec![0.1, 0.2, 0.3], vec![1.0; 3], vec![0.0; 3], par).unwrap();
        assert!(matches!(pde_residual(&prof), Err(Error::GridTooShort { .. })));
    }

    #[test]
    fn eigen_residual_vanishes_at_roots() {
        let grid = geomspace(1e-2, 1e2, 200);
        for &(n, p, q, l) in &[(3, 2.0, 4.0, 0.0), (3, 2.0, 4.0, 0.75), (4, 3.0, 5.0, 0.5)] {
            let par = pp(n, p, q, l);
            let r = par.roots();
            for a in [r.alpha, r.beta] {
                if a == 0.0 {
                    continue;
                }
                let rep = halfspace_eigen_residual(a, &par, &grid).unwrap();
                assert!(rep.equation.max_abs <= 1e-12, "{}", rep.equation.max_abs);
                assert!(rep.linearized.max_abs <= 1e-12);
            }
            let c = (n as f64 - 1.0) / p;
            let rep = halfspace_eigen_residual(c, &par, &grid).unwrap();
            let gap = par.lambda_max() - l;
            assert!(rep.equation.pointwise.iter().all(|v| (v - gap).abs() < 1e-12 * gap.max(1.0)));
        }
    }

    #[test]
    fn config_rejects_overflowing_range() {
        let par = pp(5, 2.0, 3.0, 0.0);
        assert!(integrate(1.0, &par, &OdeConfig::default().with_t_max(200.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn power_relation_round_trip(t in 1e-4f64..200.0, d in -50.0f64..50.0, p in 1.2f64..3.5) {
            let f = flux_from_du(t, d, 4, p);
            let back = du_from_flux(t, f, 4, p);
            // rounding in ln|F| is amplified by 1/(p-1)
            let tol = 8.0 * f64::EPSILON * (f.abs().ln().abs() + 1.0) / (p - 1.0);
            prop_assert!((back - d).abs() <= tol * d.abs().max(1e-300));
        }

        #[test]
        fn trajectories_decrease_and_keep_power_relation(a in 0.05f64..4.0, l in 0.0f64..0.9) {
            let par = pp(3, 2.0, 4.0, l);
            let tr = integrate(a, &par, &OdeConfig::default().with_t_max(8.0)).unwrap();
            prop_assert!(tr.profile.validate().is_ok());
            let pr = &tr.profile;
            let end = pr.len() - if tr.event == OdeEvent::Cross { 1 } else { 0 };
            for i in 1..end {
                prop_assert!(pr.u[i] < pr.u[i - 1]);
            }
        }
    }
}
