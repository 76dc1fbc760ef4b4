use serde::Serialize;

use super::integrator::integrate;
use super::SimSpec;
use crate::chain::{Boundary, ChainConfig, State};
use crate::curve::{CurveMethod, ScgfCurve, ScgfPoint};
use crate::error::{Error, Result};

const MIN_ESS: f64 = 10.0;
const MIN_BIN_COUNT: usize = 30;

#[derive(Clone, Debug, Serialize)]
pub struct SignTest {
    pub mean: f64,
    pub stderr: f64,
    pub pass: bool,
}

fn require_periodic_uniform(cfg: &ChainConfig, what: &str) -> Result<f64> {
    if cfg.boundary() != Boundary::Periodic {
        return Err(Error::Precondition(format!("{what} needs a periodic chain")));
    }
    cfg.uniform_temperature()
        .ok_or_else(|| Error::Precondition(format!("{what} needs a uniform temperature")))
}

/// Checks `tau <J> > 0` at three standard errors in the driven ring.
pub fn current_sign_test(cfg: &ChainConfig, sim: &SimSpec) -> Result<SignTest> {
    require_periodic_uniform(cfg, "the current sign test")?;
    if cfg.tau() == 0.0 {
        return Err(Error::Precondition("the current sign test is undefined for tau = 0".into()));
    }
    let pot = cfg.potential();
    let flat = match pot.harmonic_params() {
        Some((_, w)) => w == 0.0,
        None => (0..=64).all(|i| pot.d2u(-2.0 + i as f64 / 16.0) == 0.0),
    };
    if flat {
        return Err(Error::Precondition("the interaction potential has U'' = 0 everywhere".into()));
    }
    let stats = integrate(cfg, sim, &State::zeros(cfg.n()))?;
    let (mean, stderr) = (stats.time_avg_current, stats.time_avg_current_stderr);
    Ok(SignTest { mean, stderr, pass: cfg.tau() * mean > 0.0 && mean.abs() > 3.0 * stderr })
}

/// `(1/t) log` of the replica average of `exp(N lambda int J)` with a
/// jackknife standard error.
///
/// Points whose exponential average is carried by fewer than ten replicas
/// (effective sample size `(sum w)^2 / sum w^2`) are flagged `low_ess`. The
/// naive estimator is only meaningful for small `|N lambda|`, roughly
/// `|N lambda| <= 0.2 gamma / T`; that bound is a heuristic.
pub fn empirical_scgf(cfg: &ChainConfig, sim: &SimSpec, lambda_grid: &[f64]) -> Result<ScgfCurve> {
    if sim.n_replicas < 100 {
        return Err(Error::Precondition(format!("empirical SCGF needs at least 100 replicas, got {}", sim.n_replicas)));
    }
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !l.is_finite()) {
        return Err(Error::Config("lambda grid must be non-empty and finite".into()));
    }
    let stats = integrate(cfg, sim, &State::zeros(cfg.n()))?;
    let integrals: Vec<f64> = stats.replicas.iter().map(|r| r.integrated_current).collect();
    let points = lambda_grid
        .iter()
        .map(|&lambda| exponential_average(&integrals, cfg.n() as f64 * lambda, stats.t_sample, lambda))
        .collect();
    Ok(ScgfCurve { method: CurveMethod::Empirical, n: cfg.n(), tau: cfg.tau(), points })
}

fn exponential_average(integrals: &[f64], weight: f64, t: f64, lambda: f64) -> ScgfPoint {
    if weight == 0.0 {
        return ScgfPoint { lambda, value: 0.0, stderr: Some(0.0), low_ess: false };
    }
    let exponents: Vec<f64> = integrals.iter().map(|i| weight * i).collect();
    if exponents.iter().any(|a| !a.is_finite()) {
        return ScgfPoint { lambda, value: f64::INFINITY, stderr: None, low_ess: true };
    }
    let r = exponents.len() as f64;
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = exponents.iter().map(|a| (a - top).exp()).collect();
    let sum: f64 = w.iter().sum();
    let sum_sq: f64 = w.iter().map(|x| x * x).sum();
    let value = (top + (sum / r).ln()) / t;
    let loo: Vec<f64> = w.iter().map(|wi| (top + ((sum - wi).max(f64::MIN_POSITIVE) / (r - 1.0)).ln()) / t).collect();
    let loo_mean = loo.iter().sum::<f64>() / r;
    let stderr = ((r - 1.0) / r * loo.iter().map(|f| (f - loo_mean).powi(2)).sum::<f64>()).sqrt();
    ScgfPoint { lambda, value, stderr: Some(stderr), low_ess: sum * sum / sum_sq < MIN_ESS }
}

#[derive(Clone, Debug, Serialize)]
pub struct GcReport {
    pub max_deviation: f64,
    pub usable_pairs: usize,
    pub t: f64,
    /// `(sigma_hat, d(sigma_hat))` for every usable bin pair.
    pub deviations: Vec<(f64, f64)>,
}

/// Finite-time fluctuation-relation check on `w = (1/t) int sigma`:
/// `d = (1/t) log(P(w ~ s) / P(w ~ -s)) - s` over symmetric histogram bins
/// holding at least 30 samples each. The relation holds only as `t -> inf`.
pub fn gc_histogram_check(cfg: &ChainConfig, sim: &SimSpec, bins: usize) -> Result<GcReport> {
    require_periodic_uniform(cfg, "the fluctuation-relation check")?;
    if bins < 2 {
        return Err(Error::Config("need at least two histogram bins".into()));
    }
    let stats = integrate(cfg, sim, &State::zeros(cfg.n()))?;
    let t = stats.t_sample;
    let w: Vec<f64> = stats.replicas.iter().map(|r| r.integrated_sigma / t).collect();
    let half = w.iter().fold(0f64, |m, x| m.max(x.abs()));
    if !(half > 0.0 && half.is_finite()) {
        return Err(Error::Statistics("entropy production samples are degenerate".into()));
    }
    let width = 2.0 * half / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in &w {
        counts[(((x + half) / width) as usize).min(bins - 1)] += 1;
    }
    let mut deviations = Vec::new();
    for i in bins / 2..bins {
        let mirror = bins - 1 - i;
        let center = -half + (i as f64 + 0.5) * width;
        if mirror == i || counts[i] < MIN_BIN_COUNT || counts[mirror] < MIN_BIN_COUNT {
            continue;
        }
        let d = (counts[i] as f64 / counts[mirror] as f64).ln() / t - center;
        deviations.push((center, d));
    }
    if deviations.len() < 2 {
        return Err(Error::Statistics(format!(
            "only {} symmetric bin pairs hold {MIN_BIN_COUNT} samples each",
            deviations.len()
        )));
    }
    let max_deviation = deviations.iter().fold(0f64, |m, (_, d)| m.max(d.abs()));
    Ok(GcReport { max_deviation, usable_pairs: deviations.len(), t, deviations })
}
