//! Explicit barriers for the linear part of the equation.
//!
//! * supersolution `cosh(t/m)^{-mα_λ}`: `-Δ_p v - λv^{p-1} ≥ c_λ e^{-2t/m} v^{p-1}`
//!   for large `t`;
//! * subsolution `sinh(t/2)^{-2α_λ}`: `-Δ_p v - λv^{p-1} ≤ 0` for large `t`;
//! * weak envelope, the supersolution built for `λ + ε`.
//!
//! Residuals are assembled from closed-form derivatives and reduced by
//! `v^{p-1}`; every `1 - (...)` difference goes through `expm1`/`ln_1p`
//! so the `O(e^{-2t/m})` signal survives at large `t`.

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::numerics::geomspace;
use crate::radial_ode::RadialProfile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    Supersolution,
    Subsolution,
    WeakEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    pub m: u32,
    pub epsilon: f64,
    pub params: ProblemParams,
}

impl BarrierSpec {
    pub fn supersolution(params: ProblemParams, m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("m = {m} must be at least 2")));
        }
        Ok(Self { kind: BarrierKind::Supersolution, m, epsilon: 0.0, params })
    }

    pub fn subsolution(params: ProblemParams) -> Self {
        Self { kind: BarrierKind::Subsolution, m: 2, epsilon: 0.0, params }
    }

    pub fn weak_envelope(params: ProblemParams, m: u32, epsilon: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("m = {m} must be at least 2")));
        }
        if !(epsilon > 0.0 && params.lambda + epsilon < params.lambda_max()) {
            return Err(Error::Domain(format!("need ε > 0 and λ + ε < λ_max, got ε = {epsilon}")));
        }
        Ok(Self { kind: BarrierKind::WeakEnvelope, m, epsilon, params })
    }

    /// Parameters whose fast root sets the exponent: `λ + ε` for the
    /// weak envelope.
    pub fn effective_params(&self) -> ProblemParams {
        match self.kind {
            BarrierKind::WeakEnvelope => self.params.with_lambda(self.params.lambda + self.epsilon).expect("checked"),
            _ => self.params,
        }
    }

    pub fn exponent(&self) -> f64 {
        self.effective_params().roots().alpha
    }

    /// `+1` where the claim is `residual ≥ 0`, `-1` for `≤ 0`.
    pub fn claimed_sign(&self) -> f64 {
        match self.kind {
            BarrierKind::Subsolution => -1.0,
            _ => 1.0,
        }
    }
}

/// `c_λ = (α^{p-1}(n-1) - pλ) + 2α^{p-1}(p-1)/m`.
pub fn c_lambda(params: &ProblemParams, m: u32) -> f64 {
    let (n, p, l) = (params.n as f64, params.p, params.lambda);
    let ap = params.roots().alpha.powf(p - 1.0);
    (ap * (n - 1.0) - p * l) + 2.0 * ap * (p - 1.0) / m as f64
}

/// `(v, v', v'')` at `t`.
pub fn barrier_value_and_derivatives(spec: &BarrierSpec, t: f64) -> Result<(f64, f64, f64)> {
    let a = spec.exponent();
    match spec.kind {
        BarrierKind::Supersolution | BarrierKind::WeakEnvelope => {
            if t < 0.0 {
                return Err(Error::Domain("t must be nonnegative".into()));
            }
            let m = spec.m as f64;
            let (th, ch) = ((t / m).tanh(), (t / m).cosh());
            let v = (-m * a * ch.ln()).exp();
            let s2 = 1.0 / (ch * ch);
            Ok((v, -a * th * v, (a * a * th * th - a / m * s2) * v))
        }
        BarrierKind::Subsolution => {
            if !(t > 0.0) {
                return Err(Error::Domain("the subsolution is singular at t = 0".into()));
            }
            let c = 1.0 / (t / 2.0).tanh();
            let v = (-2.0 * a * (t / 2.0).sinh().ln()).exp();
            Ok((v, -a * c * v, (a * a * c * c + 0.5 * a * (c * c - 1.0)) * v))
        }
    }
}

/// `v(t)` of the barrier on a grid, as a profile with exact derivatives.
pub fn barrier_profile(spec: &BarrierSpec, t: &[f64]) -> Result<RadialProfile> {
    let mut u = Vec::with_capacity(t.len());
    let mut du = Vec::with_capacity(t.len());
    for &s in t {
        let (v, d, _) = barrier_value_and_derivatives(spec, s)?;
        u.push(v);
        du.push(d);
    }
    RadialProfile::from_derivatives(t.to_vec(), u, du, spec.params)
}

/// `[-Δ_p v - λ'v^{p-1}]/v^{p-1}` minus `c_λ e^{-2t/m}` for the
/// supersolution, where `λ'` is `λ + ε` for the weak envelope.
pub fn reduced_residual(spec: &BarrierSpec, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain("residuals are evaluated at t > 0".into()));
    }
    let par = spec.effective_params();
    let (n, p) = (par.n as f64, par.p);
    let alpha = par.roots().alpha;
    let (a_, b_) = (n - 1.0, (p - 1.0) * alpha);
    let eps = 2.0 / (2.0 * t).exp_m1(); // coth t - 1
    let ap = alpha.powf(p - 1.0);
    match spec.kind {
        BarrierKind::Supersolution | BarrierKind::WeakEnvelope => {
            let m = spec.m as f64;
            let x = t / m;
            // ln tanh x = ln(1 - 2/(e^{2x}+1))
            let ln_t = (-2.0 / ((2.0 * x).exp() + 1.0)).ln_1p();
            let s2 = 1.0 / (x.cosh() * x.cosh());
            let core = a_ * ((p - 1.0) * ln_t + eps.ln_1p()).exp_m1() - b_ * (p * ln_t).exp_m1()
                + (p - 1.0) * ((p - 2.0) * ln_t).exp() * s2 / m;
            let mut r = ap * core;
            if spec.kind == BarrierKind::Supersolution {
                r -= c_lambda(&par, spec.m) * (-2.0 * x).exp();
            }
            Ok(r)
        }
        BarrierKind::Subsolution => {
            let g = 2.0 / t.exp_m1(); // coth(t/2) - 1
            let lg = g.ln_1p();
            let core = a_ * ((p - 1.0) * lg + eps.ln_1p()).exp_m1() - b_ * (p * lg).exp_m1()
                - (p - 1.0) * ((p - 2.0) * lg).exp() * g * (2.0 + g) / 2.0;
            Ok(ap * core)
        }
    }
}

fn residual(spec: &BarrierSpec, t: f64) -> Result<f64> {
    let r = reduced_residual(spec, t)?;
    let (v, _, _) = barrier_value_and_derivatives(spec, t)?;
    Ok(r * v.powf(spec.params.p - 1.0))
}

/// `-Δ_p v - λv^{p-1} - c_λ e^{-2t/m} v^{p-1}` for the supersolution
/// (for the weak envelope: `-Δ_p v - (λ+ε)v^{p-1}`).
pub fn supersolution_residual(spec: &BarrierSpec, t: f64) -> Result<f64> {
    if spec.kind == BarrierKind::Subsolution {
        return Err(Error::Precondition("barrier is a subsolution".into()));
    }
    residual(spec, t)
}

/// `-Δ_p v - λv^{p-1}` for the subsolution.
pub fn subsolution_residual(spec: &BarrierSpec, t: f64) -> Result<f64> {
    if spec.kind != BarrierKind::Subsolution {
        return Err(Error::Precondition("barrier is not a subsolution".into()));
    }
    residual(spec, t)
}

pub const VALIDITY_RANGE: (f64, f64) = (1e-2, 100.0);
pub const POINTS_PER_DECADE: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub spec: BarrierSpec,
    /// Smallest grid radius beyond which every node has the claimed sign.
    pub radius: Option<f64>,
    /// Sign re-check on a grid ten times finer, from one coarse step past
    /// the radius.
    pub refined_ok: bool,
    pub grid_points: usize,
}

fn scan_grid(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let decades = (b / a).log10();
    geomspace(a, b, (decades * per_decade as f64).round() as usize + 1)
}

fn sign_ok(spec: &BarrierSpec, t: f64) -> Result<bool> {
    Ok(spec.claimed_sign() * reduced_residual(spec, t)? >= 0.0)
}

pub fn find_validity_radius(spec: &BarrierSpec) -> Result<ValidityReport> {
    let (a, b) = VALIDITY_RANGE;
    let grid = scan_grid(a, b, POINTS_PER_DECADE);
    let mut first = grid.len();
    for i in (0..grid.len()).rev() {
        if !sign_ok(spec, grid[i])? {
            break;
        }
        first = i;
    }
    if first == grid.len() {
        return Ok(ValidityReport { spec: *spec, radius: None, refined_ok: false, grid_points: grid.len() });
    }
    let radius = grid[first];
    let start = grid[(first + 1).min(grid.len() - 1)];
    let mut refined_ok = true;
    if start < b {
        for t in scan_grid(start, b, 10 * POINTS_PER_DECADE) {
            if !sign_ok(spec, t)? {
                refined_ok = false;
                break;
            }
        }
    }
    Ok(ValidityReport { spec: *spec, radius: Some(radius), refined_ok, grid_points: grid.len() })
}

/// Half-space eigenprofile `y_n^{α_λ}`.
pub fn halfspace_profile(params: &ProblemParams, height: f64) -> f64 {
    height.powf(params.roots().alpha)
}
