//! Oscillator chain model: configuration, observables, generalized detailed
//! balance and the Lyapunov function.

mod config;
mod gdb;
mod lyapunov;
mod observables;
mod potential;

pub use config::{Boundary, ChainConfig, ReferenceMeasureSpec, State};
pub use gdb::{check_gdb, check_gdb_with_sigma, TestFamily};
pub use lyapunov::{
    b_is_admissible, coercive_energy, count_violations, fit_lyapunov_constants, lyapunov_f, lyapunov_phi,
    sample_probe_states, LyapunovFit,
};
pub use observables::{drift, hamiltonian, local_current, local_energy, mean_current, momentum_reversal, sigma_value};
pub use potential::{harmonic_delta, CustomPotential, PotentialKind, PotentialSpec, ScalarFn};

pub(crate) use observables::{conservative_and_drive_force, mean_current_unchecked, sigma_unchecked};
