use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::dual::D3;
use crate::chain::ChainConfig;
use crate::error::{Error, Result};

/// Uniform harmonic periodic chain: the setting of the Gaussian calculus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingParams {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub omega0: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl RingParams {
    pub fn new(n: usize, temperature: f64, omega0: f64, omega: f64, gamma: f64) -> Result<Self> {
        let r = RingParams { n, temperature, omega0, omega, gamma };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Config(format!("{what} = {v} out of range")));
        if self.n == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("T", self.temperature);
        }
        if !(self.omega0 >= 0.0 && self.omega0.is_finite()) {
            return bad("omega0", self.omega0);
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad("omega", self.omega);
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", self.gamma);
        }
        Ok(())
    }

    /// Extracts the ring parameters of a uniform harmonic periodic chain.
    pub fn from_config(cfg: &ChainConfig) -> Result<Self> {
        let (t, omega0, omega, gamma) = cfg.uniform_harmonic_periodic().ok_or_else(|| {
            Error::Precondition("Gaussian calculus needs a uniform harmonic periodic chain".into())
        })?;
        RingParams::new(cfg.n(), t, omega0, omega, gamma)
    }

    /// Number of independent modes `k = 0..=N/2`.
    pub fn n_modes(&self) -> usize {
        self.n / 2 + 1
    }

    /// Normal-mode frequency squared, `omega0^2 + 4 omega^2 sin^2(pi k / N)`.
    pub fn omega_k_sq(&self, k: usize) -> f64 {
        let s = (PI * k as f64 / self.n as f64).sin();
        self.omega0 * self.omega0 + 4.0 * self.omega * self.omega * s * s
    }

    /// `sin(2 pi k / N)`, the mode weight of the current.
    pub fn current_weight(&self, k: usize) -> f64 {
        if 2 * k % self.n == 0 {
            0.0
        } else {
            (2.0 * PI * k as f64 / self.n as f64).sin()
        }
    }

    /// Number of Fourier indices `+-k` represented by mode `k`.
    pub fn multiplicity(&self, k: usize) -> f64 {
        if k == 0 || 2 * k == self.n {
            1.0
        } else {
            2.0
        }
    }

    /// Modes entering the sums; the zero mode of an unpinned chain is dropped.
    pub fn is_active(&self, k: usize) -> bool {
        !(k == 0 && self.omega0 == 0.0)
    }

    /// Modes whose `a` coefficient is forced to zero by `a_{-k} = -a_k`.
    pub fn is_self_conjugate(&self, k: usize) -> bool {
        k == 0 || 2 * k == self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ModeParams {
    pub fn reference(k: usize) -> Self {
        ModeParams { k, a: 0.0, b: 0.0, c: 0.0 }
    }
}

/// Translation-invariant Gaussian measure given by per-mode coefficients over
/// the reference Gibbs measure at temperature `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMeasureSpec {
    #[serde(flatten)]
    pub ring: RingParams,
    pub modes: Vec<ModeParams>,
}

impl GaussianMeasureSpec {
    pub fn reference(ring: RingParams) -> Self {
        GaussianMeasureSpec { ring, modes: (0..ring.n_modes()).map(ModeParams::reference).collect() }
    }

    pub fn new(ring: RingParams, modes: Vec<ModeParams>) -> Result<Self> {
        ring.validate()?;
        if modes.len() != ring.n_modes() {
            return Err(Error::Dimension { expected: ring.n_modes(), got: modes.len() });
        }
        let spec = GaussianMeasureSpec { ring, modes };
        for (k, m) in spec.modes.iter().enumerate() {
            if m.k != k {
                return Err(Error::Config(format!("mode at position {k} carries index {}", m.k)));
            }
            if ring.is_self_conjugate(k) && m.a != 0.0 {
                return Err(Error::Config(format!("mode {k} is self-conjugate and must have a = 0")));
            }
            if ring.is_active(k) {
                mode_delta(&ring, m)?;
            }
        }
        Ok(spec)
    }

    fn active_modes(&self) -> impl Iterator<Item = &ModeParams> {
        self.modes.iter().filter(|m| self.ring.is_active(m.k))
    }
}

/// `delta_k`, failing when the mode is not a positive-definite Gaussian.
pub fn mode_delta(ring: &RingParams, m: &ModeParams) -> Result<f64> {
    let w2 = ring.omega_k_sq(m.k);
    if w2 <= 0.0 {
        return Err(Error::IndefiniteMode { k: m.k, reason: "omega_k^2 = 0".into() });
    }
    let minus = 1.0 + 2.0 * (m.b - m.c);
    let plus = 1.0 + 2.0 * (m.b + m.c);
    let inv = (1.0 + 2.0 * m.b).powi(2) * w2 - 4.0 * m.c * m.c * w2 - m.a * m.a;
    if !(minus > 0.0 && plus > 0.0 && inv > 0.0) {
        return Err(Error::IndefiniteMode {
            k: m.k,
            reason: format!("1+2(b-c) = {minus:.3e}, 1+2(b+c) = {plus:.3e}, 1/delta = {inv:.3e}"),
        });
    }
    Ok(1.0 / inv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeCovariances {
    #[serde(rename = "PP")]
    pub pp: f64,
    #[serde(rename = "QQ")]
    pub qq: f64,
    pub antisym_pq: f64,
    pub sym_pq: f64,
}

pub fn mode_covariances(spec: &GaussianMeasureSpec, k: usize) -> Result<ModeCovariances> {
    let m = spec
        .modes
        .get(k)
        .ok_or_else(|| Error::Index { index: k, valid: format!("0..{}", spec.modes.len()) })?;
    let delta = mode_delta(&spec.ring, m)?;
    let t = spec.ring.temperature;
    Ok(ModeCovariances {
        pp: delta * (1.0 + 2.0 * (m.b - m.c)) * spec.ring.omega_k_sq(k) * t,
        qq: delta * (1.0 + 2.0 * (m.b + m.c)) * t,
        antisym_pq: -2.0 * m.a * delta * t,
        sym_pq: 0.0,
    })
}

/// Minimal field interface shared by `f64` and the dual numbers.
pub(crate) trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
}

impl Real for D3 {
    fn cst(v: f64) -> Self {
        D3::constant(v)
    }
}

/// Contributions of one Fourier index `k` (not yet multiplied by the
/// multiplicity of `+-k`).
#[derive(Clone, Copy, Debug)]
pub(crate) struct ModeTerms<R> {
    /// `omega^2 T sin_k a delta`: the index-`k` share of `N <J>`.
    pub current: R,
    pub entropy: R,
    pub activity: R,
}

pub(crate) fn mode_terms<R: Real>(ring: &RingParams, k: usize, a: R, b: R, c: R, tau: f64) -> ModeTerms<R> {
    let (t, w, g) = (ring.temperature, ring.omega, ring.gamma);
    let w2k = ring.omega_k_sq(k);
    let sin = ring.current_weight(k);
    let one_2b = b * 2.0 + 1.0;
    let plus = (b + c) * 2.0 + 1.0;
    let minus = (b - c) * 2.0 + 1.0;
    let delta = R::cst(1.0) / (one_2b * one_2b * w2k - c * c * (4.0 * w2k) - a * a);
    let bc = b + c;
    let entropy = delta * g * (a * a * (R::cst(1.0) - bc * 2.0) + bc * bc * minus * (4.0 * w2k));
    let drive = tau * tau * w.powi(4) * sin * sin / (4.0 * t * t);
    let activity = delta * (1.0 / g) * (plus * drive + c * c * (4.0 * w2k * w2k) / plus);
    let current = a * delta * (w * w * t * sin);
    ModeTerms { current, entropy, activity }
}

/// Per-index objective `(lambda + tau/2T^2) N<J>_k - s_k/4 - K_k`.
pub(crate) fn mode_objective<R: Real>(ring: &RingParams, k: usize, a: R, b: R, c: R, lambda: f64, tau: f64) -> R {
    let terms = mode_terms(ring, k, a, b, c, tau);
    let tilt = lambda + tau / (2.0 * ring.temperature * ring.temperature);
    terms.current * tilt - terms.entropy * 0.25 - terms.activity
}

fn checked_terms(spec: &GaussianMeasureSpec, tau: f64) -> Result<Vec<(f64, ModeTerms<f64>)>> {
    spec.active_modes()
        .map(|m| {
            mode_delta(&spec.ring, m)?;
            Ok((spec.ring.multiplicity(m.k), mode_terms(&spec.ring, m.k, m.a, m.b, m.c, tau)))
        })
        .collect()
}

/// Dynamical activity `K^tau(mu)`.
pub fn k_tau(spec: &GaussianMeasureSpec, tau: f64) -> Result<f64> {
    Ok(checked_terms(spec, tau)?.iter().map(|(m, t)| m * t.activity).sum())
}

/// Entropy production `s(mu)`.
pub fn entropy_production(spec: &GaussianMeasureSpec) -> Result<f64> {
    Ok(checked_terms(spec, 0.0)?.iter().map(|(m, t)| m * t.entropy).sum())
}

/// Modes outside the region `1 - 2(b + c) >= 0` where the entropy formula is
/// known to be non-negative.
pub fn entropy_advisory(spec: &GaussianMeasureSpec) -> Vec<usize> {
    spec.modes.iter().filter(|m| 1.0 - 2.0 * (m.b + m.c) < 0.0).map(|m| m.k).collect()
}

/// `<J>_mu = (omega^2 T / N) sum_k sin(2 pi k/N) a_k delta_k`.
pub fn mean_current_gaussian(spec: &GaussianMeasureSpec) -> Result<f64> {
    let total: f64 = checked_terms(spec, 0.0)?.iter().map(|(m, t)| m * t.current).sum();
    Ok(total / spec.ring.n as f64)
}

/// Large-deviation functionals of a Gaussian measure at `(lambda, tau)`.
///
/// `I = s/4 + K - <sigma>/2` with `<sigma>_mu = (tau N / T^2) <J>_mu`, and
/// `F = N lambda <J>_mu - I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LDReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub s: f64,
    pub mean_j: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

pub fn functional_f(spec: &GaussianMeasureSpec, lambda: f64, tau: f64) -> Result<LDReport> {
    let k = k_tau(spec, tau)?;
    let s = entropy_production(spec)?;
    let mean_j = mean_current_gaussian(spec)?;
    let (n, t) = (spec.ring.n as f64, spec.ring.temperature);
    let sigma = tau * n / (t * t) * mean_j;
    let i = 0.25 * s + k - 0.5 * sigma;
    Ok(LDReport { k, s, mean_j, i, f: n * lambda * mean_j - i })
}

/// Gaussian measure `exp(-H/T + N (tau + 2 lambda T^2) J / (gamma T^2))`,
/// the stationary state of the chain with drive `tau + 2 lambda T^2`.
pub fn stationary_tilted_params(ring: &RingParams, lambda: f64, tau: f64) -> Result<GaussianMeasureSpec> {
    ring.validate()?;
    let (t, w, g) = (ring.temperature, ring.omega, ring.gamma);
    let drive = tau + 2.0 * lambda * t * t;
    let modes = (0..ring.n_modes())
        .map(|k| ModeParams { k, a: drive * w * w * ring.current_weight(k) / (g * t), b: 0.0, c: 0.0 })
        .collect();
    GaussianMeasureSpec::new(*ring, modes)
}

/// Small-`lambda` optimum at `tau = 0`: `a` to first and `b, c` to second order.
pub fn optimal_mode_coeffs_small_lambda(ring: &RingParams, lambda: f64, k: usize) -> Result<ModeParams> {
    ring.validate()?;
    if k >= ring.n_modes() {
        return Err(Error::Index { index: k, valid: format!("0..{}", ring.n_modes()) });
    }
    let (t, w, g) = (ring.temperature, ring.omega, ring.gamma);
    let sin = ring.current_weight(k);
    let w2k = ring.omega_k_sq(k);
    let w4 = w.powi(4);
    let l2 = lambda * lambda;
    Ok(ModeParams {
        k,
        a: 2.0 * t * w * w / g * sin * lambda,
        b: -(t * t * w4 / (2.0 * w2k * w2k) + t * t * w4 / (g * g * w2k)) * sin * sin * l2,
        c: t * t * w4 / (2.0 * w2k * w2k) * sin * sin * l2,
    })
}
