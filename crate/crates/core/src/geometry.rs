//! Poincaré ball and upper half-space charts of `H^n`.
//!
//! Ball metric `(2/(1-|x|²))² |dx|²`, half-space metric `|dx|²/x_n²`.
//! The map `Φ(x) = -e_n + 2(x+e_n)/|x+e_n|²` is an isometry between the two
//! charts and its own inverse.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Points with `1 - |x| < BOUNDARY_TOL` are treated as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Finite-difference step used by the gradient checks.
pub const FD_STEP: f64 = 1e-5;
pub const DEFAULT_SEED: u64 = 42;

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::Dimension { expected: a, got: b })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    x: Vec<f64>,
}

impl BallPoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Domain("points need dimension at least 2".into()));
        }
        let r = norm2(&x).sqrt();
        if !r.is_finite() || 1.0 - r < BOUNDARY_TOL {
            return Err(Error::Domain(format!("|x| = {r} is not strictly inside the unit ball")));
        }
        Ok(Self { x })
    }
    pub fn origin(n: usize) -> Self {
        Self { x: vec![0.0; n] }
    }
    pub fn coords(&self) -> &[f64] {
        &self.x
    }
    pub fn dim(&self) -> usize {
        self.x.len()
    }
    pub fn norm(&self) -> f64 {
        norm2(&self.x).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpacePoint {
    x: Vec<f64>,
}

impl HalfSpacePoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::Domain("points need dimension at least 2".into()));
        }
        let last = *x.last().unwrap();
        if !(last > 0.0) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("last coordinate {last} must be positive")));
        }
        Ok(Self { x })
    }
    pub fn coords(&self) -> &[f64] {
        &self.x
    }
    pub fn dim(&self) -> usize {
        self.x.len()
    }
    pub fn height(&self) -> f64 {
        *self.x.last().unwrap()
    }
}

/// A point of the ideal boundary, seen as a unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDirection {
    xi: Vec<f64>,
}

impl BoundaryDirection {
    pub fn new(xi: Vec<f64>) -> Result<Self> {
        if xi.len() < 2 {
            return Err(Error::Domain("directions need dimension at least 2".into()));
        }
        let r = norm2(&xi).sqrt();
        if (r - 1.0).abs() > 1e-14 {
            return Err(Error::Domain(format!("|xi| = {r} is not 1")));
        }
        Ok(Self { xi })
    }
    /// Normalises `v` onto the unit sphere.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        let r = norm2(v).sqrt();
        if !(r > 0.0) {
            return Err(Error::Domain("zero vector has no direction".into()));
        }
        Ok(Self { xi: v.iter().map(|c| c / r).collect() })
    }
    /// `±e_n`.
    pub fn pole(n: usize, south: bool) -> Self {
        let mut xi = vec![0.0; n];
        xi[n - 1] = if south { -1.0 } else { 1.0 };
        Self { xi }
    }
    pub fn coords(&self) -> &[f64] {
        &self.xi
    }
    pub fn dim(&self) -> usize {
        self.xi.len()
    }
}

/// Euclidean sphere `S(a, r)` orthogonal to the unit sphere: `r² = |a|² - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalSphere {
    center: Vec<f64>,
    radius: f64,
}

impl OrthogonalSphere {
    pub fn new(center: Vec<f64>) -> Result<Self> {
        let c2 = norm2(&center);
        if !(c2 > 1.0) || !c2.is_finite() {
            return Err(Error::Domain(format!("|center|² = {c2} must exceed 1")));
        }
        Ok(Self { radius: (c2 - 1.0).sqrt(), center })
    }
    /// Sphere with centre `ξ/μ`, `0 < μ < 1`; it separates `ξ` from the origin.
    pub fn from_direction(xi: &BoundaryDirection, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Domain(format!("mu = {mu} must lie in (0, 1)")));
        }
        let center: Vec<f64> = xi.coords().iter().map(|c| c / mu).collect();
        Ok(Self { center, radius: (1.0 / (mu * mu) - 1.0).sqrt() })
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    /// Signed side indicator `|x - a|² - r²`: negative inside the Euclidean sphere.
    pub fn side(&self, x: &[f64]) -> f64 {
        dist2(x, &self.center) - self.radius * self.radius
    }
    /// Signed Euclidean distance from `x` to the sphere.
    pub fn offset(&self, x: &[f64]) -> f64 {
        dist2(x, &self.center).sqrt() - self.radius
    }
}

/// A point in either chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeometryPoint {
    Ball(BallPoint),
    HalfSpace(HalfSpacePoint),
}

impl GeometryPoint {
    pub fn to_ball(&self) -> Result<BallPoint> {
        match self {
            GeometryPoint::Ball(b) => Ok(b.clone()),
            GeometryPoint::HalfSpace(h) => halfspace_to_ball(h),
        }
    }
    pub fn to_halfspace(&self) -> Result<HalfSpacePoint> {
        match self {
            GeometryPoint::Ball(b) => ball_to_halfspace(b),
            GeometryPoint::HalfSpace(h) => Ok(h.clone()),
        }
    }
}

/// `2 asinh(|x-y| / sqrt((1-|x|²)(1-|y|²)))`.
pub fn geodesic_distance_ball(x: &BallPoint, y: &BallPoint) -> Result<f64> {
    same_dim(x.dim(), y.dim())?;
    let d = dist2(&x.x, &y.x).sqrt();
    let den = ((1.0 - norm2(&x.x)) * (1.0 - norm2(&y.x))).sqrt();
    Ok(2.0 * (d / den).asinh())
}

/// `2 asinh(|x-y| / (2 sqrt(x_n y_n)))`, equivalent to
/// `cosh d = 1 + |x-y|²/(2 x_n y_n)`.
pub fn geodesic_distance_halfspace(x: &HalfSpacePoint, y: &HalfSpacePoint) -> Result<f64> {
    same_dim(x.dim(), y.dim())?;
    let d = dist2(&x.x, &y.x).sqrt();
    Ok(2.0 * (d / (2.0 * (x.height() * y.height()).sqrt())).asinh())
}

/// Factor `ρ` with `|∇_g u|_g = ρ |∇u|`.
pub fn conformal_gradient_factor(point: &GeometryPoint) -> f64 {
    match point {
        GeometryPoint::Ball(b) => 0.5 * (1.0 - norm2(&b.x)),
        GeometryPoint::HalfSpace(h) => h.height(),
    }
}

/// Raw `Φ(x) = -e_n + 2(x+e_n)/|x+e_n|²` on coordinate vectors.
pub fn cayley(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let mut s = x.to_vec();
    s[n - 1] += 1.0;
    let s2 = norm2(&s);
    if s2.sqrt() <= 1e-14 {
        return Err(Error::MapsToInfinity);
    }
    let mut out: Vec<f64> = s.iter().map(|c| 2.0 * c / s2).collect();
    // last coordinate as (1 - |x|²)/|x+e_n|² to avoid cancellation
    out[n - 1] = (1.0 - norm2(x)) / s2;
    Ok(out)
}

pub fn ball_to_halfspace(x: &BallPoint) -> Result<HalfSpacePoint> {
    HalfSpacePoint::new(cayley(&x.x)?)
}

pub fn halfspace_to_ball(y: &HalfSpacePoint) -> Result<BallPoint> {
    BallPoint::new(cayley(&y.x)?)
}

/// Image of a boundary direction: a point of the plane `x_n = 0`.
pub fn boundary_to_halfspace(xi: &BoundaryDirection) -> Result<Vec<f64>> {
    let mut y = cayley(&xi.xi)?;
    let n = y.len();
    y[n - 1] = 0.0;
    Ok(y)
}

/// Inversion in `s`: `a + r²(x-a)/|x-a|²` on raw coordinates.
pub fn reflect(s: &OrthogonalSphere, x: &[f64]) -> Vec<f64> {
    let d2 = dist2(x, &s.center);
    let r2 = s.radius * s.radius;
    x.iter().zip(&s.center).map(|(xi, ai)| ai + r2 * (xi - ai) / d2).collect()
}

pub fn reflect_sphere(s: &OrthogonalSphere, x: &BallPoint) -> Result<BallPoint> {
    same_dim(s.center.len(), x.dim())?;
    BallPoint::new(reflect(s, &x.x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectionOutcome {
    Ok,
    Equality,
    Violation,
}

/// Distance comparison between an object `P`, its mirror image `P'` and an
/// observer `E` on the object's side: `dist(P,E) ≤ dist(P',E)`, with
/// equality exactly when `E` lies on the sphere.
pub fn reflection_distance_check(
    s: &OrthogonalSphere,
    observer: &BallPoint,
    object: &BallPoint,
) -> Result<ReflectionOutcome> {
    same_dim(s.center.len(), observer.dim())?;
    same_dim(s.center.len(), object.dim())?;
    let obj_off = s.offset(&object.x);
    if obj_off.abs() <= 1e-9 {
        return Err(Error::Precondition("object lies on the sphere".into()));
    }
    let obs_off = s.offset(&observer.x);
    let on_sphere = obs_off.abs() <= 1e-9;
    if !on_sphere && obs_off.signum() != obj_off.signum() {
        return Err(Error::Precondition("observer is not on the object's side".into()));
    }
    let image = BallPoint::new(reflect(s, &object.x))?;
    let d_obj = geodesic_distance_ball(object, observer)?;
    let d_img = geodesic_distance_ball(&image, observer)?;
    Ok(if on_sphere {
        if (d_obj - d_img).abs() <= 1e-9 * (1.0 + d_img) {
            ReflectionOutcome::Equality
        } else {
            ReflectionOutcome::Violation
        }
    } else if d_obj < d_img {
        ReflectionOutcome::Ok
    } else {
        ReflectionOutcome::Violation
    })
}

/// `E_ξ(x) = ((1-|x|²)/|x-ξ|²)^a`.
pub fn eigen_profile(xi: &BoundaryDirection, x: &BallPoint, exponent: f64) -> Result<f64> {
    same_dim(xi.dim(), x.dim())?;
    Ok(eigen_profile_raw(&xi.xi, &x.x, exponent))
}

fn eigen_profile_raw(xi: &[f64], x: &[f64], a: f64) -> f64 {
    ((1.0 - norm2(x)) / dist2(x, xi)).powf(a)
}

/// The same profile in geodesic polar coordinates about the origin:
/// `(cosh r - (ξ·θ) sinh r)^{-a}` at the point `tanh(r/2) θ`.
pub fn eigen_profile_polar(xi: &BoundaryDirection, r: f64, theta: &[f64], exponent: f64) -> Result<f64> {
    same_dim(xi.dim(), theta.len())?;
    let dot: f64 = xi.xi.iter().zip(theta).map(|(a, b)| a * b).sum();
    Ok((r.cosh() - dot * r.sinh()).powf(-exponent))
}

/// Euclidean gradient by central differences.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `|∇_g E_ξ|_g / E_ξ` at a ball point, by central differences with step `h`.
pub fn eigen_log_gradient(xi: &BoundaryDirection, x: &BallPoint, exponent: f64, h: f64) -> Result<f64> {
    same_dim(xi.dim(), x.dim())?;
    let f = |y: &[f64]| eigen_profile_raw(&xi.xi, y, exponent);
    let g = fd_gradient(&f, &x.x, h);
    let rho = 0.5 * (1.0 - norm2(&x.x));
    Ok(rho * norm2(&g).sqrt() / f(&x.x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Ball,
    HalfSpace,
}

fn chart_rho(chart: Chart, x: &[f64]) -> f64 {
    match chart {
        Chart::Ball => 0.5 * (1.0 - norm2(x)),
        Chart::HalfSpace => x[x.len() - 1],
    }
}

/// Hyperbolic `-Δ_p u` in a conformal chart with factor `ρ`:
/// `Δ_p u = ρ^n div(ρ^{p-n} |∇u|^{p-2} ∇u)`, all derivatives by nested
/// central differences, Richardson-extrapolated from steps `h` and `h/2`.
pub fn p_laplacian_fd<F: Fn(&[f64]) -> f64>(chart: Chart, u: &F, x: &[f64], p: f64, h: f64) -> f64 {
    let coarse = p_laplacian_central(chart, u, x, p, h);
    let fine = p_laplacian_central(chart, u, x, p, 0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

fn p_laplacian_central<F: Fn(&[f64]) -> f64>(chart: Chart, u: &F, x: &[f64], p: f64, h: f64) -> f64 {
    let n = x.len();
    let field = |y: &[f64], i: usize| -> f64 {
        let g = fd_gradient(u, y, h);
        let gn = norm2(&g).sqrt();
        let rho = chart_rho(chart, y);
        rho.powf(p - n as f64) * gn.powf(p - 2.0) * g[i]
    };
    let mut y = x.to_vec();
    let mut div = 0.0;
    for i in 0..n {
        y[i] = x[i] + h;
        let fp = field(&y, i);
        y[i] = x[i] - h;
        let fm = field(&y, i);
        y[i] = x[i];
        div += (fp - fm) / (2.0 * h);
    }
    -chart_rho(chart, x).powf(n as f64) * div
}

/// Uniform sample of the open ball of radius `rmax`.
pub fn random_ball_point<R: Rng>(rng: &mut R, n: usize, rmax: f64) -> BallPoint {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2 = norm2(&v);
        if r2 < 1.0 && r2 > 0.0 {
            let x: Vec<f64> = v.iter().map(|c| c * rmax).collect();
            if let Ok(b) = BallPoint::new(x) {
                return b;
            }
        }
    }
}

pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> BoundaryDirection {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2 = norm2(&v);
        if r2 < 1.0 && r2 > 1e-6 {
            return BoundaryDirection::from_vector(&v).unwrap();
        }
    }
}

/// Half-space point with horizontal coordinates in `[-3, 3]` and height in
/// `[0.05, 5]` (log-uniform).
pub fn random_halfspace_point<R: Rng>(rng: &mut R, n: usize) -> HalfSpacePoint {
    let mut x: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
    x.push(rng.gen_range((0.05f64).ln()..(5.0f64).ln()).exp());
    HalfSpacePoint::new(x).unwrap()
}

/// Counters from the seeded Monte Carlo geometry checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometrySuiteReport {
    pub samples: usize,
    pub seed: u64,
    pub involution_max_err: f64,
    pub involution_failures: usize,
    pub reflection_isometry_max_err: f64,
    pub reflection_isometry_failures: usize,
    pub distance_identity_max_err: f64,
    pub distance_identity_failures: usize,
    pub inequality_ok: usize,
    pub inequality_equality: usize,
    pub inequality_violations: usize,
}

impl GeometrySuiteReport {
    pub fn passed(&self) -> bool {
        self.involution_failures == 0
            && self.reflection_isometry_failures == 0
            && self.distance_identity_failures == 0
            && self.inequality_violations == 0
    }
}

/// Seeded Monte Carlo suite: `Φ∘Φ = Id`, reflections preserve distance,
/// ball and half-space distances agree under `Φ`, and the reflection
/// distance inequality never fails.
pub fn geometry_suite(n: usize, samples: usize, seed: u64) -> GeometrySuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = GeometrySuiteReport { samples, seed, ..Default::default() };
    let tol = 1e-10;
    for k in 0..samples {
        // involution on both charts
        let x = random_ball_point(&mut rng, n, 0.95);
        let back = cayley(&cayley(x.coords()).unwrap()).unwrap();
        let e = dist2(&back, x.coords()).sqrt();
        rep.involution_max_err = rep.involution_max_err.max(e);
        if e > tol {
            rep.involution_failures += 1;
        }
        let y = random_halfspace_point(&mut rng, n);
        let back = cayley(&cayley(y.coords()).unwrap()).unwrap();
        let e = dist2(&back, y.coords()).sqrt() / (1.0 + norm2(y.coords()).sqrt());
        rep.involution_max_err = rep.involution_max_err.max(e);
        if e > tol {
            rep.involution_failures += 1;
        }

        // distance identity across charts
        let a = random_ball_point(&mut rng, n, 0.95);
        let b = random_ball_point(&mut rng, n, 0.95);
        let dab = geodesic_distance_ball(&a, &b).unwrap();
        let ha = ball_to_halfspace(&a).unwrap();
        let hb = ball_to_halfspace(&b).unwrap();
        let dh = geodesic_distance_halfspace(&ha, &hb).unwrap();
        let e = (dab - dh).abs() / (1.0 + dab);
        rep.distance_identity_max_err = rep.distance_identity_max_err.max(e);
        if e > tol {
            rep.distance_identity_failures += 1;
        }

        // reflection isometry
        let xi = random_direction(&mut rng, n);
        let mu = rng.gen_range(0.05..0.95);
        let s = OrthogonalSphere::from_direction(&xi, mu).unwrap();
        if let (Ok(ra), Ok(rb)) = (reflect_sphere(&s, &a), reflect_sphere(&s, &b)) {
            let e = (geodesic_distance_ball(&ra, &rb).unwrap() - dab).abs() / (1.0 + dab);
            rep.reflection_isometry_max_err = rep.reflection_isometry_max_err.max(e);
            if e > tol {
                rep.reflection_isometry_failures += 1;
            }
        }

        // reflection distance inequality; every 100th sample puts the
        // observer on the sphere
        let object = loop {
            let o = random_ball_point(&mut rng, n, 0.95);
            if s.offset(o.coords()).abs() > 1e-6 {
                break o;
            }
        };
        let observer = if k % 100 == 0 {
            point_on_sphere(&mut rng, &s, n)
        } else {
            loop {
                let o = random_ball_point(&mut rng, n, 0.95);
                if s.offset(o.coords()).signum() == s.offset(object.coords()).signum() {
                    break o;
                }
                if let Ok(r) = reflect_sphere(&s, &o) {
                    if s.offset(r.coords()).signum() == s.offset(object.coords()).signum() {
                        break r;
                    }
                }
            }
        };
        match reflection_distance_check(&s, &observer, &object) {
            Ok(ReflectionOutcome::Ok) => rep.inequality_ok += 1,
            Ok(ReflectionOutcome::Equality) => rep.inequality_equality += 1,
            _ => rep.inequality_violations += 1,
        }
    }
    rep
}

/// A ball point on `s`, sampled along random rays from the centre.
pub fn point_on_sphere<R: Rng>(rng: &mut R, s: &OrthogonalSphere, n: usize) -> BallPoint {
    loop {
        let d = random_direction(rng, n);
        let x: Vec<f64> = s.center().iter().zip(d.coords()).map(|(a, u)| a + s.radius() * u).collect();
        if let Ok(b) = BallPoint::new(x) {
            if b.norm() < 0.999 {
                return b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn bp(v: &[f64]) -> BallPoint {
        BallPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let o = BallPoint::origin(3);
        assert_eq!(geodesic_distance_ball(&o, &o).unwrap(), 0.0);
        let x = bp(&[0.0, 0.5f64.tanh(), 0.0]);
        assert!((geodesic_distance_ball(&o, &x).unwrap() - 1.0).abs() < 1e-14);
        let r = 0.7f64;
        let x = bp(&[r, 0.0, 0.0]);
        let expected = ((1.0 + r) / (1.0 - r)).ln();
        assert!((geodesic_distance_ball(&o, &x).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = BallPoint::origin(3);
        let b = BallPoint::origin(4);
        assert!(matches!(geodesic_distance_ball(&a, &b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn boundary_points_rejected() {
        assert!(BallPoint::new(vec![1.0, 0.0]).is_err());
        assert!(BallPoint::new(vec![1.0 - 1e-13, 0.0]).is_err());
        assert!(HalfSpacePoint::new(vec![0.3, 0.0]).is_err());
        assert!(BoundaryDirection::new(vec![0.6, 0.8 + 1e-12]).is_err());
        assert!(OrthogonalSphere::new(vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn conformal_factors() {
        assert_eq!(conformal_gradient_factor(&GeometryPoint::Ball(BallPoint::origin(3))), 0.5);
        let h = HalfSpacePoint::new(vec![2.0, -1.0, 1.0]).unwrap();
        assert_eq!(conformal_gradient_factor(&GeometryPoint::HalfSpace(h)), 1.0);
        let mut prev = 0.5;
        for k in 1..50 {
            let r = 1.0 - 0.5f64.powi(k);
            if let Ok(b) = BallPoint::new(vec![r, 0.0]) {
                let f = conformal_gradient_factor(&GeometryPoint::Ball(b));
                assert!(f < prev && f > 0.0);
                prev = f;
            }
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn cayley_maps_e_n_to_origin_and_south_pole_to_infinity() {
        let e = HalfSpacePoint::new(vec![0.0, 0.0, 1.0]).unwrap();
        let o = halfspace_to_ball(&e).unwrap();
        assert!(o.coords().iter().all(|c| c.abs() < 1e-16));
        assert_eq!(cayley(&[0.0, 0.0, -1.0]), Err(Error::MapsToInfinity));
        assert_eq!(cayley(&[0.0, 1e-15, -1.0]), Err(Error::MapsToInfinity));
        let south = BoundaryDirection::pole(3, false);
        let y = boundary_to_halfspace(&south).unwrap();
        assert!(y.iter().all(|c| c.abs() < 1e-16));
    }

    #[test]
    fn reflection_fixes_sphere_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let xi = random_direction(&mut rng, 3);
            let s = OrthogonalSphere::from_direction(&xi, rng.gen_range(0.1..0.9)).unwrap();
            let x = point_on_sphere(&mut rng, &s, 3);
            let y = reflect_sphere(&s, &x).unwrap();
            assert!(dist2(x.coords(), y.coords()).sqrt() < 1e-12);
            assert_eq!(reflection_distance_check(&s, &x, &random_on_side(&mut rng, &s)).unwrap(), ReflectionOutcome::Equality);
        }
    }

    fn random_on_side<R: Rng>(rng: &mut R, s: &OrthogonalSphere) -> BallPoint {
        loop {
            let o = random_ball_point(rng, 3, 0.95);
            if s.offset(o.coords()).abs() > 1e-6 {
                return o;
            }
        }
    }

    #[test]
    fn observer_equal_object_is_ok() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let xi = random_direction(&mut rng, 4);
            let s = OrthogonalSphere::from_direction(&xi, rng.gen_range(0.1..0.9)).unwrap();
            let o = random_ball_point(&mut rng, 4, 0.95);
            if s.offset(o.coords()).abs() > 1e-6 {
                assert_eq!(reflection_distance_check(&s, &o, &o).unwrap(), ReflectionOutcome::Ok);
            }
        }
    }

    #[test]
    fn object_on_sphere_is_precondition_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = OrthogonalSphere::from_direction(&BoundaryDirection::pole(3, false), 0.5).unwrap();
        let x = point_on_sphere(&mut rng, &s, 3);
        assert!(matches!(reflection_distance_check(&s, &x, &x), Err(Error::Precondition(_))));
    }

    #[test]
    fn eigen_profile_at_origin_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let xi = random_direction(&mut rng, 3);
            assert!((eigen_profile(&xi, &BallPoint::origin(3), 1.7).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eigen_profile_polar_form_agrees_without_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let xi = random_direction(&mut rng, 3);
            let theta = random_direction(&mut rng, 3);
            let r = rng.gen_range(0.0..4.0);
            let x: Vec<f64> = theta.coords().iter().map(|c| c * (r / 2.0f64).tanh()).collect();
            let ball = eigen_profile(&xi, &bp(&x), 1.3).unwrap();
            let polar = eigen_profile_polar(&xi, r, theta.coords(), 1.3).unwrap();
            assert!((ball / polar - 1.0).abs() < 1e-10, "{ball} vs {polar}");
        }
    }

    #[test]
    fn eigen_profile_conjugates_to_height_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let south = BoundaryDirection::pole(3, true);
        for _ in 0..1000 {
            let y = random_halfspace_point(&mut rng, 3);
            let x = halfspace_to_ball(&y).unwrap();
            let e = eigen_profile(&south, &x, 1.5).unwrap();
            let expected = y.height().powf(1.5);
            assert!((e - expected).abs() <= 1e-10 * expected.max(1.0));
        }
    }

    #[test]
    fn eigen_log_gradient_equals_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let xi = random_direction(&mut rng, 3);
            let x = random_ball_point(&mut rng, 3, 0.9);
            let g = eigen_log_gradient(&xi, &x, 1.5, FD_STEP).unwrap();
            assert!((g - 1.5).abs() < 1e-6, "{g}");
        }
    }

    #[test]
    fn p_laplacian_charts_agree_under_cayley() {
        // -Δ_p y_n^a = f(a) y_n^{a(p-1)} in the half-space, and the ball
        // profile E_{-e_n} is its pull-back.
        use crate::exponents::f_aux;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (n, p, a) = (3usize, 2.5, 1.1);
        let south = BoundaryDirection::pole(n, true);
        for _ in 0..20 {
            let y = random_halfspace_point(&mut rng, n);
            if y.height() < 0.3 || y.height() > 3.0 {
                continue;
            }
            let x = halfspace_to_ball(&y).unwrap();
            if x.norm() > 0.8 {
                continue;
            }
            let uh = |z: &[f64]| z[n - 1].powf(a);
            let ub = |z: &[f64]| eigen_profile_raw(south.coords(), z, a);
            let lh = p_laplacian_fd(Chart::HalfSpace, &uh, y.coords(), p, 1e-3);
            let lb = p_laplacian_fd(Chart::Ball, &ub, x.coords(), p, 1e-3);
            let exact = f_aux(a, n, p) * y.height().powf(a * (p - 1.0));
            assert!((lh - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{lh} {exact}");
            assert!((lb - lh).abs() <= 1e-6 * exact.abs().max(1.0), "{lb} {lh}");
        }
    }

    #[test]
    fn small_geometry_suite_passes() {
        let rep = geometry_suite(3, 2000, DEFAULT_SEED);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.inequality_equality > 0);
    }

    fn arb_ball(n: usize) -> impl Strategy<Value = Vec<f64>> {
        // cube samples pulled back inside radius 0.95
        proptest::collection::vec(-0.55f64..0.55, n).prop_map(|v| {
            let r = norm2(&v).sqrt();
            if r > 0.95 {
                v.iter().map(|x| x * 0.95 / r).collect()
            } else {
                v
            }
        })
    }

    proptest! {
        #[test]
        fn distance_metric_axioms(a in arb_ball(3), b in arb_ball(3), c in arb_ball(3)) {
            let (a, b, c) = (bp(&a), bp(&b), bp(&c));
            let dab = geodesic_distance_ball(&a, &b).unwrap();
            let dba = geodesic_distance_ball(&b, &a).unwrap();
            let dac = geodesic_distance_ball(&a, &c).unwrap();
            let dcb = geodesic_distance_ball(&c, &b).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert!((dab - dba).abs() <= 1e-12);
            prop_assert!(dab <= dac + dcb + 1e-10);
            prop_assert_eq!(geodesic_distance_ball(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn reflection_is_involutive_isometry(a in arb_ball(4), b in arb_ball(4), d in proptest::collection::vec(-1.0f64..1.0, 4), mu in 0.05f64..0.95) {
            prop_assume!(norm2(&d) > 1e-4);
            let s = OrthogonalSphere::from_direction(&BoundaryDirection::from_vector(&d).unwrap(), mu).unwrap();
            let (a, b) = (bp(&a), bp(&b));
            let ra = reflect_sphere(&s, &a).unwrap();
            let rb = reflect_sphere(&s, &b).unwrap();
            let back = reflect_sphere(&s, &ra).unwrap();
            prop_assert!(dist2(back.coords(), a.coords()).sqrt() < 1e-12);
            let d0 = geodesic_distance_ball(&a, &b).unwrap();
            let d1 = geodesic_distance_ball(&ra, &rb).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-10 * (1.0 + d0));
        }

        #[test]
        fn cayley_preserves_distance(a in arb_ball(3), b in arb_ball(3)) {
            let (a, b) = (bp(&a), bp(&b));
            let d0 = geodesic_distance_ball(&a, &b).unwrap();
            let d1 = geodesic_distance_halfspace(&ball_to_halfspace(&a).unwrap(), &ball_to_halfspace(&b).unwrap()).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-10 * (1.0 + d0));
        }
    }
}
