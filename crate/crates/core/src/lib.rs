//! Numerical laboratory for stochastic localization on log-concave measures.
//!
//! The crate is organised around five subsystems:
//!
//! - [`measures`] — a small catalog of isotropic log-concave test measures
//!   (standard Gaussian, centered product exponential, uniform cube) with
//!   exact samplers, derivatives and closed-form oracles.
//! - [`localization`] — simulation of the tilt process `θ_t = tX + B_t`
//!   and its Euler–Maruyama counterpart, posterior moments of the tilted
//!   reweightings, eigenvalue trajectories of the posterior covariance and
//!   the dynamical identity checks built on them.
//! - [`assist`] — piecewise-exponential/quadratic eigenvalue weight
//!   functions, the doubly-logarithmic time schedule, growth-bound and
//!   dyadic-integral checks.
//! - [`heatflow`] — Gaussian smoothing `μ_s = μ ∗ γ_s`, the semigroups
//!   `P_s` and `Q_s = P_s(uρ)/ρ_s`, and quadrature verification of the
//!   variance, Hessian-window, contraction and Bochner identities.
//! - [`spectral`] — a 1D divergence-form discretization of the generator
//!   `L = Δ + ⟨∇log ρ, ∇⟩`, spectral projections, the coordinate spectral
//!   profile, thin-shell and `H⁻¹` inequalities, Poincaré and isoperimetric
//!   constants.
//!
//! Everything is deterministic given a base seed: parallel work uses one
//! counter-based RNG stream per path and fixed-order compensated reduction.

pub mod assist;
pub mod check;
pub mod error;
pub mod heatflow;
pub mod localization;
pub mod measures;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
