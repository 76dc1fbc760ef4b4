//! Langevin integration of the chain and empirical estimators built on it.
//!
//! Every replica draws its noise from ChaCha8 streams keyed by
//! `(seed, replica)` with one stream per site, so results do not depend on how
//! replicas are scheduled across threads.

mod estimators;
mod integrator;

use serde::{Deserialize, Serialize};

use crate::chain::ChainConfig;
use crate::error::{Error, Result};

pub use estimators::{current_sign_test, empirical_scgf, gc_histogram_check, GcReport, SignTest};
pub use integrator::{integrate, integrate_replica, ReplicaStats, TrajectoryStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    EulerMaruyama,
    /// Symmetric kick/drift splitting around an exact Ornstein-Uhlenbeck
    /// momentum update (BAOAB ordering).
    #[default]
    SplittingBAOA,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub dt: f64,
    /// Defaults to `20 / min(gamma_i)`.
    #[serde(default)]
    pub t_burn: Option<f64>,
    pub t_sample: f64,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "one")]
    pub n_replicas: usize,
}

fn one() -> usize {
    1
}

impl SimSpec {
    pub fn new(dt: f64, t_sample: f64, seed: u64, n_replicas: usize) -> Self {
        SimSpec { dt, t_burn: None, t_sample, seed, scheme: Scheme::default(), n_replicas }
    }

    pub fn with_burn(mut self, t_burn: f64) -> Self {
        self.t_burn = Some(t_burn);
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn burn_time(&self, cfg: &ChainConfig) -> f64 {
        self.t_burn.unwrap_or_else(|| {
            let g = cfg.gamma().iter().copied().fold(f64::INFINITY, f64::min);
            if g > 0.0 { 20.0 / g } else { 0.0 }
        })
    }

    pub fn burn_steps(&self, cfg: &ChainConfig) -> u64 {
        (self.burn_time(cfg) / self.dt).round() as u64
    }

    pub fn sample_steps(&self) -> u64 {
        (self.t_sample / self.dt).round() as u64
    }

    /// Hard checks; returns advisory warnings that do not stop a run.
    pub fn validate(&self, cfg: &ChainConfig) -> Result<Vec<String>> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_sample.is_finite() && self.t_sample >= 100.0 * self.dt) {
            return Err(Error::Config(format!("t_sample must be at least 100 dt, got {}", self.t_sample)));
        }
        if let Some(b) = self.t_burn {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("t_burn must be non-negative, got {b}")));
            }
        }
        if self.n_replicas == 0 {
            return Err(Error::Config("n_replicas must be positive".into()));
        }
        let mut warnings = Vec::new();
        let rate = cfg.gamma().iter().copied().fold(max_frequency(cfg), f64::max);
        if self.dt * rate >= 0.5 {
            warnings.push(format!("dt * max(gamma, omega_k) = {:.3} >= 0.5; the integrator may be unstable", self.dt * rate));
        }
        Ok(warnings)
    }
}

/// Upper bound on the normal-mode frequencies, `sqrt(sup V'' + 4 sup U'')`
/// with the suprema probed on `[-2, 2]` for non-harmonic potentials.
fn max_frequency(cfg: &ChainConfig) -> f64 {
    let pot = cfg.potential();
    if let Some((w0, w)) = pot.harmonic_params() {
        return (w0 * w0 + 4.0 * w * w).sqrt();
    }
    let grid = (0..=64).map(|i| -2.0 + 4.0 * i as f64 / 64.0);
    let (v, u) = grid.fold((0f64, 0f64), |(v, u), x| (v.max(pot.d2v(x)), u.max(pot.d2u(x))));
    (v + 4.0 * u).sqrt()
}
