//! Multispecies Curie–Weiss toolkit: limiting pressure via a variational
//! inf-sup, the mean-field free-energy landscape, exact finite-size sector
//! laws, Glauber sampling, and fluctuation (CLT) verification.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`] — model specification, the effective interaction Δ, spectral
//!   split, finite-size species assignment.
//! - [`landscape`] — mean-field free energy, stationary points, maximizers.
//! - [`variational`] — the variational functional and the inf-sup solver.
//! - [`numerics`] — rigorous Riemann sums and Laplace approximations.
//! - [`exact`] — exact sector-magnetization laws by enumeration.
//! - [`sampler`] — Glauber dynamics with convergence diagnostics.
//! - [`clt`] — fluctuation parameters and empirical verification.
//! - [`cli`] — the command-line interface.

pub mod clt;
pub mod error;
pub mod exact;
pub mod landscape;
pub mod model;
pub mod numerics;
pub mod sampler;
pub mod variational;

pub mod cli;

pub use error::{McwError, Result};
pub use model::{FiniteSizes, ModelSpec, PriorSpec, SpectralSplit};
