//! Hamiltonian Monte Carlo with palindromic multi-stage splitting integrators.
//!
//! The crate covers the whole workflow around adaptive 2- and 3-stage
//! integrators:
//!
//! - [`model`]: target densities (Gaussian, Bayesian logistic regression),
//!   dataset ingestion, Hessian frequency extraction.
//! - [`integrator`]: k-stage kick/drift schemes, their action on a target, and
//!   the exact harmonic-oscillator analysis (propagators, energy-error bounds,
//!   stability limits).
//! - [`adapt`]: minimax tabulation of the optimal kick coefficient, fitting
//!   factors, nondimensionalization and stability-limit estimation.
//! - [`sampler`]: the HMC transition plus the tuning, burn-in and production
//!   stages.
//! - [`diagnostics`]: acceptance rate, ESS, MCSE and PSRF.
//! - [`cli`]: the `splitting-hmc` command line front end.

pub mod adapt;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
