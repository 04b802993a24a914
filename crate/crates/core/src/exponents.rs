//! Parameter validation and the closed-form constants of the problem:
//! `λ_max`, the critical exponent `p*`, the auxiliary function
//! `f(α) = |α|^{p-2}α(n-1-(p-1)α)` and its two level-set roots.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// The tuple `(n, p, q, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
}

/// Slow and fast roots of `f(α) = λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRoots {
    pub beta: f64,
    pub alpha: f64,
}

fn check_np(n: usize, p: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 2")));
    }
    if !(p > 1.0 && p < n as f64) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, {n})")));
    }
    if n == 2 && p >= 2.0 {
        return Err(Error::Domain("n = 2 requires p < 2".into()));
    }
    Ok(())
}

pub fn lambda_max(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < n as f64) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, {n})")));
    }
    Ok(((n as f64 - 1.0) / p).powf(p))
}

pub fn critical_exponent(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < n as f64) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, {n})")));
    }
    let n = n as f64;
    Ok(n * p / (n - p))
}

/// `f(α) = |α|^{p-2} α (n-1-(p-1)α)`, with `f(0) = 0` for every `p`.
pub fn f_aux(alpha: f64, n: usize, p: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let n1 = n as f64 - 1.0;
    alpha.signum() * alpha.abs().powf(p - 1.0) * (n1 - (p - 1.0) * alpha)
}

impl ProblemParams {
    pub fn new(n: usize, p: f64, q: f64, lambda: f64) -> Result<Self> {
        check_np(n, p)?;
        let ps = critical_exponent(n, p)?;
        if !(q > p && q <= ps * (1.0 + 1e-15)) {
            return Err(Error::Domain(format!("q = {q} must lie in (p, p*] = ({p}, {ps}]")));
        }
        let lm = lambda_max(n, p)?;
        if !(lambda >= 0.0 && lambda < lm) {
            return Err(Error::Domain(format!("lambda = {lambda} must lie in [0, {lm})")));
        }
        Ok(Self { n, p, q, lambda })
    }

    /// `(n, p, p*, 0)`.
    pub fn critical(n: usize, p: f64) -> Result<Self> {
        let ps = critical_exponent(n, p)?;
        Self::new(n, p, ps, 0.0)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n, self.p, self.q, lambda)
    }

    pub fn lambda_max(&self) -> f64 {
        ((self.n as f64 - 1.0) / self.p).powf(self.p)
    }

    pub fn p_star(&self) -> f64 {
        let n = self.n as f64;
        n * self.p / (n - self.p)
    }

    pub fn is_critical(&self) -> bool {
        (self.q - self.p_star()).abs() <= 1e-12 * self.p_star()
    }

    /// Decay roots; the parameters are already validated so this cannot fail.
    pub fn roots(&self) -> DecayRoots {
        decay_roots(self).expect("validated parameters")
    }

    /// Right-hand side `λ|u|^{p-2}u + |u|^{q-2}u`.
    pub fn nonlinearity(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let a = u.abs();
        u.signum() * (self.lambda * a.powf(self.p - 1.0) + a.powf(self.q - 1.0))
    }

    pub fn label(&self) -> String {
        format!("n={} p={} q={} lambda={}", self.n, self.p, self.q, self.lambda)
    }
}

/// Roots `β_λ ≤ (n-1)/p < α_λ` of `f = λ` by bisection to machine precision.
pub fn decay_roots(params: &ProblemParams) -> Result<DecayRoots> {
    let (n, p, lambda) = (params.n, params.p, params.lambda);
    check_np(n, p)?;
    let lm = lambda_max(n, p)?;
    if !(lambda >= 0.0 && lambda < lm) {
        return Err(Error::Domain(format!("lambda = {lambda} must lie in [0, {lm})")));
    }
    let n1 = n as f64 - 1.0;
    let top = n1 / (p - 1.0);
    if lambda == 0.0 {
        return Ok(DecayRoots { beta: 0.0, alpha: top });
    }
    let c = n1 / p;
    let f = |a: f64| f_aux(a, n, p);
    // f increases on [0, c] and decreases on [c, top].
    let (mut lo, mut hi) = (0.0, c);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = pick(lo, hi, |a| (f(a) - lambda).abs());
    let (mut lo, mut hi) = (c, top);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = pick(lo, hi, |a| (f(a) - lambda).abs());
    Ok(DecayRoots { beta, alpha })
}

fn pick<G: Fn(f64) -> f64>(a: f64, b: f64, g: G) -> f64 {
    if g(a) <= g(b) {
        a
    } else {
        b
    }
}

/// Sharp constant `S_p` of `∫|∇u|^p ≥ S_p (∫|u|^{p*})^{p/p*}` on `R^n`.
///
/// Talenti's value `S_p = C^{-p}` with
/// `C = π^{-1/2} n^{-1/p} ((p-1)/(n-p))^{1-1/p}
///      [Γ(1+n/2)Γ(n) / (Γ(n/p)Γ(1+n-n/p))]^{1/n}`,
/// attained by `(1 + |x|^{p/(p-1)})^{-(n-p)/p}`.
pub fn euclidean_sobolev_constant(n: usize, p: f64) -> Result<f64> {
    if !(p > 1.0 && p < n as f64) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, {n})")));
    }
    let nf = n as f64;
    let lg = (ln_gamma(1.0 + nf / 2.0) + ln_gamma(nf)
        - ln_gamma(nf / p)
        - ln_gamma(1.0 + nf - nf / p))
        / nf;
    let ln_c = -0.5 * PI.ln() - nf.ln() / p + (1.0 - 1.0 / p) * ((p - 1.0) / (nf - p)).ln() + lg;
    Ok((-p * ln_c).exp())
}
