//! Current large deviations of thermostated oscillator chains.
//!
//! * [`chain`]: model, observables, generalized detailed balance, Lyapunov function.
//! * [`sim`]: Langevin integration and empirical estimators.
//! * [`gaussian`]: exact Gaussian-mode large-deviation calculus.
//! * [`tilted`]: principal eigenvalue of the tilted generator via a Riccati equation.
//! * [`cli`]: the `ldchain` command-line runner.
//! * [`curve`]: sampled SCGF and rate curves with CSV/JSON output.

pub mod chain;
pub mod cli;
pub mod curve;
pub mod error;
pub mod gaussian;
pub mod numerics;
pub mod poly;
pub mod sim;
pub mod tilted;

pub use error::{Error, Result};
