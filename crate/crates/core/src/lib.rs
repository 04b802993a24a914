//! Numerical laboratory for positive finite-energy solutions of
//!
//! ```text
//! -Δ_p u - λ|u|^{p-2}u = |u|^{q-2}u   in H^n
//! ```
//!
//! The crate covers the decay exponents of the linearised problem, the two
//! coordinate models of hyperbolic space, a radial shooting solver, explicit
//! barrier functions, a discrete Rayleigh-quotient minimiser and numerical
//! checks of the Picone, Hardy and Pohozaev inequalities/identities.
//!
//! Everything is double precision. Radial functions are functions of the
//! geodesic distance `t` from the origin, with volume element
//! `ω_{n-1} sinh(t)^{n-1} dt`.

pub mod closed_forms;
pub mod error;
pub mod exponents;
pub mod geometry;
pub mod identities;
pub mod numerics;
pub mod radial_ode;
pub mod report;
pub mod shooting;
pub mod variational;

pub use error::{Error, Result};
pub use exponents::{DecayRoots, ProblemParams};
pub use radial_ode::{OdeConfig, RadialProfile};
pub use report::ResidualReport;
