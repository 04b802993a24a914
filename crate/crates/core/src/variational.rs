//! Weighted radial quadrature, the Rayleigh quotient for `S_{λ,q}`, a
//! projected-gradient minimiser, the radial pointwise bound and the
//! weighted Hardy inequality.
//!
//! On a grid `t_0 = 0 < … < t_N = T` the discrete quotient uses
//! difference quotients on the cells, weighted by `sinh^{n-1}` at cell
//! midpoints, and trapezoid node masses for the zeroth-order terms:
//!
//! ```text
//! J(u) = Σ_e E_e |g_e|^p - λ Σ_i M_i u_i^p,   D(u) = Σ_i M_i u_i^q,
//! Q(u) = J(u) / D(u)^{p/q}
//! ```

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::numerics::{linspace, ln_sinh, simpson, sphere_area, thomas};
use crate::radial_ode::RadialProfile;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `ω_{n-1} ∫ f^power sinh(t)^{n-1} dt` by nonuniform Simpson.
pub fn weighted_integral(f: &[f64], power: f64, t: &[f64], n: usize) -> Result<f64> {
    if f.len() != t.len() {
        return Err(Error::Misaligned(t.len(), f.len()));
    }
    let n1 = n as f64 - 1.0;
    let y: Vec<f64> = f
        .iter()
        .zip(t)
        .map(|(&v, &s)| {
            let fp = if power == 1.0 { v } else { v.abs().powf(power) };
            if fp == 0.0 {
                0.0
            } else {
                fp * sinh_pow(s, n1)
            }
        })
        .collect();
    Ok(sphere_area(n) * simpson(t, &y)?)
}

fn sinh_pow(t: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else if t == 0.0 {
        0.0
    } else {
        (k * ln_sinh(t)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub points: usize,
    /// Clustering near the origin; 0 gives a uniform grid.
    pub stretch: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_max: 40.0, points: 2000, stretch: 4.0 }
    }
}

impl GridSpec {
    /// `t_i = T (e^{κ s_i} - 1)/(e^κ - 1)`, `s_i = i/(N-1)`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if self.stretch == 0.0 {
                    self.t_max * s
                } else {
                    self.t_max * (self.stretch * s).exp_m1() / self.stretch.exp_m1()
                }
            })
            .collect()
    }
}

/// A radial trial function on `[0, T]` with `u ≥ 0` and `u(T) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteRadialFunction {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub params: ProblemParams,
}

impl DiscreteRadialFunction {
    pub fn new(t: Vec<f64>, u: Vec<f64>, params: ProblemParams) -> Result<Self> {
        if t.len() != u.len() {
            return Err(Error::Misaligned(t.len(), u.len()));
        }
        if t.len() < 3 {
            return Err(Error::GridTooShort { needed: 3, got: t.len() });
        }
        if t[0] != 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("grid must start at 0 and increase strictly".into()));
        }
        if u.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Precondition("trial functions must be finite and nonnegative".into()));
        }
        if *u.last().unwrap() != 0.0 {
            return Err(Error::Precondition("trial functions vanish at T".into()));
        }
        Ok(Self { t, u, params })
    }

    /// Samples `f` on the grid and subtracts `f(T)`.
    pub fn from_fn(grid: &[f64], params: ProblemParams, f: impl Fn(f64) -> f64) -> Result<Self> {
        let end = f(*grid.last().unwrap());
        let u = grid.iter().map(|&t| (f(t) - end).max(0.0)).collect();
        Self::new(grid.to_vec(), u, params)
    }

    /// Resamples a decaying profile onto `grid`: Hermite interpolation on
    /// the profile's range, the power series `u(0) - c t^{p/(p-1)}` before
    /// its first node and `c (e^{-α_λ t} - e^{-α_λ T})` past its last.
    pub fn from_profile(profile: &RadialProfile, grid: &[f64]) -> Result<Self> {
        let par = profile.params;
        let p = par.p;
        let alpha = par.roots().alpha;
        let t_end_grid = *grid.last().unwrap();
        let (t0, u0, d0) = (profile.t[0], profile.u[0], profile.du[0]);
        let e = p / (p - 1.0);
        let c_series = if t0 > 0.0 { -d0 / (e * t0.powf(e - 1.0)) } else { 0.0 };
        let a_series = u0 + c_series * t0.powf(e);
        let last = profile.len() - 1;
        let (t1, u1) = (profile.t[last], profile.u[last]);
        let z = (-alpha * t_end_grid).exp();
        let c_tail = u1 / ((-alpha * t1).exp() - z);
        let u = grid
            .iter()
            .map(|&t| {
                let v = if t < t0 {
                    a_series - c_series * t.powf(e)
                } else if t <= t1 {
                    profile.value_at(t)
                } else {
                    c_tail * ((-alpha * t).exp() - z)
                };
                v.max(0.0)
            })
            .collect::<Vec<_>>();
        let mut u = u;
        *u.last_mut().unwrap() = 0.0;
        Self::new(grid.to_vec(), u, par)
    }
}

/// Precomputed cell and node weights of a grid.
#[derive(Debug, Clone)]
struct Weights {
    h: Vec<f64>,
    /// `ω h_e sinh^{n-1}(mid_e)`
    edge: Vec<f64>,
    /// `ω m_i sinh^{n-1}(t_i)` with trapezoid masses `m_i`
    node: Vec<f64>,
}

impl Weights {
    fn new(t: &[f64], n: usize) -> Self {
        let om = sphere_area(n);
        let k = n as f64 - 1.0;
        let m = t.len();
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let edge = (0..m - 1).map(|e| om * h[e] * sinh_pow(0.5 * (t[e] + t[e + 1]), k)).collect();
        let node = (0..m)
            .map(|i| {
                let mass = 0.5 * (if i > 0 { h[i - 1] } else { 0.0 } + if i + 1 < m { h[i] } else { 0.0 });
                om * mass * sinh_pow(t[i], k)
            })
            .collect();
        Self { h, edge, node }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientValue {
    pub numerator: f64,
    pub denominator: f64,
    pub value: f64,
}

fn parts(u: &[f64], w: &Weights, par: &ProblemParams) -> (f64, f64) {
    let (p, q, l) = (par.p, par.q, par.lambda);
    let mut grad = 0.0;
    for e in 0..w.h.len() {
        let g = (u[e + 1] - u[e]) / w.h[e];
        grad += w.edge[e] * g.abs().powf(p);
    }
    let mut zero = 0.0;
    let mut den = 0.0;
    for i in 0..u.len() {
        if u[i] != 0.0 {
            zero += w.node[i] * u[i].abs().powf(p);
            den += w.node[i] * u[i].abs().powf(q);
        }
    }
    (grad - l * zero, den)
}

fn quotient_with(u: &[f64], w: &Weights, par: &ProblemParams) -> Result<QuotientValue> {
    let (num, d) = parts(u, w, par);
    if !(d > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    let denominator = d.powf(par.p / par.q);
    Ok(QuotientValue { numerator: num, denominator, value: num / denominator })
}

pub fn rayleigh_quotient(u: &DiscreteRadialFunction) -> Result<QuotientValue> {
    let w = Weights::new(&u.t, u.params.n);
    quotient_with(&u.u, &w, &u.params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinimizeStatus {
    Converged,
    /// Backtracking could not decrease the quotient.
    Stalled,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimization {
    pub s_estimate: f64,
    pub minimizer: DiscreteRadialFunction,
    pub iterations: usize,
    /// `sqrt(gᵀ M⁻¹ g)` of the Lagrangian gradient at the returned iterate,
    /// relative to `|J|`.
    pub dual_norm: f64,
    pub status: MinimizeStatus,
    pub grid: GridSpec,
}

pub const FIRST_ORDER_TOL: f64 = 1e-6;

/// Initial guess `cosh(t)^{-α_λ} - cosh(T)^{-α_λ}`.
pub fn default_initial_guess(params: &ProblemParams, grid: &[f64]) -> Result<DiscreteRadialFunction> {
    let a = params.roots().alpha;
    DiscreteRadialFunction::from_fn(grid, *params, |t| (-a * t.cosh().ln()).exp())
}

/// Preconditioned projected gradient descent for `min J` subject to
/// `D = 1`.
///
/// Each step solves `M d = -∇L` with `∇L = ∇J - μ∇D`, `μ = pJ/(qD)` and
/// `M` the tridiagonal `H¹`-type form `p(p-1) Σ E_e |g_e|^{p-2} (δ_e u)²/h_e² + p Σ M_i u_i²`,
/// then backtracks on `Q(normalise(max(u + s d, 0)))` by halving `s`.
pub fn minimize_quotient(
    params: &ProblemParams,
    grid_spec: &GridSpec,
    max_iterations: usize,
    initial: Option<&DiscreteRadialFunction>,
) -> Result<Minimization> {
    if params.is_critical() {
        return Err(Error::Precondition(
            "q = p* is excluded: minimising sequences may concentrate and the truncated problem is not compact".into(),
        ));
    }
    let t = grid_spec.grid();
    let mut u = match initial {
        Some(f) => {
            if f.t != t {
                return Err(Error::Precondition("initial function must live on the requested grid".into()));
            }
            f.u.clone()
        }
        None => default_initial_guess(params, &t)?.u,
    };
    let w = Weights::new(&t, params.n);
    let (p, q, l) = (params.p, params.q, params.lambda);
    let m = t.len();
    let normalise = |u: &mut Vec<f64>| -> Result<()> {
        let (_, d) = parts(u, &w, params);
        if !(d > 0.0) {
            return Err(Error::ZeroDenominator);
        }
        let s = d.powf(-1.0 / q);
        u.iter_mut().for_each(|v| *v *= s);
        Ok(())
    };
    normalise(&mut u)?;
    let mut qv = quotient_with(&u, &w, params)?.value;
    let mut step = 1.0f64;
    let mut status = MinimizeStatus::BudgetExhausted;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..=max_iterations {
        iterations = it;
        let g: Vec<f64> = (0..m - 1).map(|e| (u[e + 1] - u[e]) / w.h[e]).collect();
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let (jv, dv) = parts(&u, &w, params);
        let mu = p * jv / (q * dv);
        let mut grad = vec![0.0; m];
        for e in 0..m - 1 {
            let flux = p * w.edge[e] * g[e].abs().powf(p - 2.0) * g[e] / w.h[e];
            if flux.is_finite() {
                grad[e] -= flux;
                grad[e + 1] += flux;
            }
        }
        for i in 0..m {
            if u[i] > 0.0 {
                grad[i] += -l * p * w.node[i] * u[i].powf(p - 1.0) - mu * q * w.node[i] * u[i].powf(q - 1.0);
            }
        }
        grad[m - 1] = 0.0;
        // Preconditioner
        let floor = 1e-3 * gmax;
        let mut diag = vec![0.0; m];
        let mut off = vec![0.0; m - 1];
        for e in 0..m - 1 {
            let ge = g[e].abs().max(floor);
            let k = p * (p - 1.0) * w.edge[e] * ge.powf(p - 2.0) / (w.h[e] * w.h[e]);
            diag[e] += k;
            diag[e + 1] += k;
            off[e] = -k;
        }
        for i in 0..m {
            diag[i] += p * w.node[i].max(1e-300);
        }
        diag[m - 1] = 1.0;
        off[m - 2] = 0.0;
        let mut sub = vec![0.0; m];
        let mut sup = vec![0.0; m];
        sub[1..m].copy_from_slice(&off);
        sup[..m - 1].copy_from_slice(&off);
        sub[m - 1] = 0.0;
        let rhs: Vec<f64> = grad.iter().map(|v| -v).collect();
        let d = thomas(&sub, &diag, &sup, &rhs);
        let dn: f64 = -grad.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        dual = dn.max(0.0).sqrt() / jv.abs();
        if dual <= FIRST_ORDER_TOL {
            status = MinimizeStatus::Converged;
            break;
        }
        if it == max_iterations {
            break;
        }
        let mut s = (2.0 * step).min(1.0);
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| (a + s * b).max(0.0)).collect();
            trial[m - 1] = 0.0;
            if normalise(&mut trial).is_ok() {
                let qt = quotient_with(&trial, &w, params)?.value;
                if qt < qv {
                    u = trial;
                    qv = qt;
                    step = s;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            status = MinimizeStatus::Stalled;
            break;
        }
    }
    let minimizer = DiscreteRadialFunction::new(t, u, *params)?;
    Ok(Minimization { s_estimate: qv, minimizer, iterations, dual_norm: dual, status, grid: *grid_spec })
}

/// `I(R) = ∫_R^∞ sinh(s)^{-(n-1)/(p-1)} ds`.
pub fn tail_weight_integral(r: f64, n: usize, p: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain("R must be positive".into()));
    }
    let k = (n as f64 - 1.0) / (p - 1.0);
    let len = 60.0 / k;
    // the integrand falls like e^{-k s}; geometric spacing resolves small R
    let s: Vec<f64> = linspace(0.0, 1.0, 20001).iter().map(|x| r + len * x * x).collect();
    let y: Vec<f64> = s.iter().map(|&v| (-k * ln_sinh(v)).exp()).collect();
    simpson(&s, &y)
}

/// `C_R = ω^{-1/p} e^{(n-1)R/p} I(R)^{(p-1)/p}`: Hölder on `|u(t)| ≤ ∫_t^∞ |u'|`
/// gives `|u(t)| e^{(n-1)t/p} ≤ C_t ‖u'‖_{L^p(H^n∖B_R)}` and `C_t` decreases in `t`.
pub fn pointwise_constant(r: f64, n: usize, p: f64) -> Result<f64> {
    let i = tail_weight_integral(r, n, p)?;
    Ok(sphere_area(n).powf(-1.0 / p) * ((n as f64 - 1.0) * r / p).exp() * i.powf((p - 1.0) / p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseBoundReport {
    pub radius: f64,
    pub c_r: f64,
    /// `max_{t ≥ R} |u(t)| e^{(n-1)t/p} / ‖u'‖_{L^p(H^n∖B_R)}`
    pub max_ratio: f64,
    pub holds: bool,
    /// `c_r / max_ratio`
    pub margin: f64,
    pub tail_norm: f64,
    /// More than half of the tail norm sits in the outer half of `[R, T]`.
    pub non_member: bool,
}

pub fn radial_pointwise_bound_check(u: &DiscreteRadialFunction, r: f64) -> Result<PointwiseBoundReport> {
    let t = &u.t;
    let par = u.params;
    let (n, p) = (par.n, par.p);
    let t_end = *t.last().unwrap();
    if !(r > 0.0 && r < t_end) {
        return Err(Error::Domain(format!("R = {r} outside (0, {t_end})")));
    }
    let w = Weights::new(t, n);
    let k = t.iter().position(|&v| v >= r).unwrap();
    let m = t.len();
    let cell = |e: usize| w.edge[e] * ((u.u[e + 1] - u.u[e]) / w.h[e]).abs().powf(p);
    let total: f64 = (k..m - 1).map(cell).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    let half = 0.5 * (r + t_end);
    let outer: f64 = (k..m - 1).filter(|&e| t[e] >= half).map(cell).sum();
    let norm = total.powf(1.0 / p);
    let max_ratio = (k..m)
        .map(|i| u.u[i] * ((n as f64 - 1.0) * t[i] / p).exp() / norm)
        .fold(0.0f64, f64::max);
    let c_r = pointwise_constant(r, n, p)?;
    Ok(PointwiseBoundReport {
        radius: r,
        c_r,
        max_ratio,
        holds: max_ratio <= c_r,
        margin: c_r / max_ratio,
        tail_norm: norm,
        non_member: outer > 0.5 * total,
    })
}

/// Cubic B-spline bump `A·B((t - c)/w)`, supported on `[c - 2w, c + 2w]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineBump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl SplineBump {
    pub fn support(&self) -> (f64, f64) {
        (self.center - 2.0 * self.width, self.center + 2.0 * self.width)
    }

    /// `(v, v')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let x = (t - self.center) / self.width;
        let a = x.abs();
        let (b, db) = if a <= 1.0 {
            (2.0 / 3.0 - a * a + 0.5 * a * a * a, -2.0 * a + 1.5 * a * a)
        } else if a <= 2.0 {
            let r = 2.0 - a;
            (r * r * r / 6.0, -0.5 * r * r)
        } else {
            (0.0, 0.0)
        };
        (self.amplitude * b, self.amplitude * db * x.signum() / self.width)
    }

    pub fn random<R: Rng>(rng: &mut R, centers: (f64, f64)) -> Self {
        Self {
            center: rng.gen_range(centers.0..centers.1),
            width: rng.gen_range(0.1..0.75),
            amplitude: rng.gen_range(0.1..10.0),
        }
    }
}

pub const HARDY_R0: f64 = 1.0;
pub const HARDY_T: f64 = 40.0;

/// `C = (κ/2)² (1 - e^{-2r₀})^{n-1}` with `κ = pα_λ - (n-1)`.
///
/// With `sinh^{n-1} t = (e^t/2)^{n-1}(1 - e^{-2t})^{n-1}` the weight
/// `e^{-pα_λ t} sinh^{n-1} t` is comparable to `e^{-κ t}` on `[r₀, ∞)`, and
/// `∫ e^{-κt}|v'|² ≥ (κ/2)² ∫ e^{-κt} v²` for compactly supported `v`.
pub fn hardy_constant(params: &ProblemParams, r0: f64) -> f64 {
    let n1 = params.n as f64 - 1.0;
    let kappa = params.p * params.roots().alpha - n1;
    (0.5 * kappa).powi(2) * (n1 * (-(-2.0 * r0).exp()).ln_1p()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub bump: SplineBump,
    pub constant: f64,
    /// `C ∫ e^{-pα_λ t} v² dV`
    pub lhs: f64,
    /// `∫ e^{-pα_λ t} |v'|² dV`
    pub rhs: f64,
    /// Largest constant admissible for this `v`.
    pub empirical_constant: f64,
    pub holds: bool,
}

pub fn hardy_check(bump: &SplineBump, params: &ProblemParams, r0: f64) -> Result<HardyReport> {
    let (a, b) = bump.support();
    if !(a > r0 && b <= HARDY_T) || !(bump.width > 0.0) {
        return Err(Error::Precondition(format!("bump support [{a}, {b}] must lie in ({r0}, {HARDY_T}]")));
    }
    let n1 = params.n as f64 - 1.0;
    let pa = params.p * params.roots().alpha;
    // knots of the spline are nodes of every sub-grid
    let mut t = Vec::new();
    for k in 0..4 {
        let seg = linspace(a + k as f64 * bump.width, a + (k + 1) as f64 * bump.width, 401);
        t.extend_from_slice(if k == 0 { &seg[..] } else { &seg[1..] });
    }
    let wt: Vec<f64> = t.iter().map(|&s| (-pa * s + n1 * ln_sinh(s)).exp()).collect();
    let v2: Vec<f64> = t.iter().zip(&wt).map(|(&s, w)| w * bump.eval(s).0.powi(2)).collect();
    let d2: Vec<f64> = t.iter().zip(&wt).map(|(&s, w)| w * bump.eval(s).1.powi(2)).collect();
    let om = sphere_area(params.n);
    let iv = om * simpson(&t, &v2)?;
    let id = om * simpson(&t, &d2)?;
    let constant = hardy_constant(params, r0);
    let lhs = constant * iv;
    Ok(HardyReport { bump: *bump, constant, lhs, rhs: id, empirical_constant: id / iv, holds: lhs <= id })
}
