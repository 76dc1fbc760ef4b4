//! Exact large-deviation calculus over translation-invariant Gaussian measures
//! of the uniform harmonic periodic chain.
//!
//! Fourier modes are indexed by `k = 0..=N/2`; mode `k` stands for the pair
//! `+-k` (a single index for `k = 0` and, for even `N`, `k = N/2`). Sums over
//! the Fourier indices run over `-n..=n` and are evaluated by multiplicity.

mod dual;
mod kappa;
mod modes;
mod optimize;
mod single;

pub use kappa::{conductivity_kappa, scaled_limit_f, KappaMethod};
pub use modes::{
    entropy_advisory, entropy_production, functional_f, k_tau, mean_current_gaussian, mode_covariances, mode_delta,
    optimal_mode_coeffs_small_lambda, stationary_tilted_params, GaussianMeasureSpec, LDReport, ModeCovariances,
    ModeParams, RingParams,
};
pub use optimize::{optimize_scgf, ScgfOptimum};
pub use single::{single_oscillator_i, single_oscillator_k, single_oscillator_k_variational, single_oscillator_s};
