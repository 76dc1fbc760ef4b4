//! Lyapunov function `Psi = exp(F)` with `F = Hhat/2 + b sum q_i p_i` and its
//! dissipation rate `Phi = -L F - sum gamma_i T_i (dF/dp_i)^2`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{ChainConfig, ReferenceMeasureSpec, State};
use super::observables::{bond_sites, conservative_and_drive_force, current_unchecked, energy_bonds, grad_q_hamiltonian, local_energy};
use crate::error::{Error, Result};

fn check(cfg: &ChainConfig, reference: &ReferenceMeasureSpec, s: &State) -> Result<()> {
    if s.q.len() != cfg.n() || s.p.len() != cfg.n() {
        return Err(Error::Dimension { expected: cfg.n(), got: s.q.len() });
    }
    if reference.beta.len() != cfg.n() {
        return Err(Error::Dimension { expected: cfg.n(), got: reference.beta.len() });
    }
    Ok(())
}

/// `F = (1/2) sum beta_i h_i + b sum q_i p_i`.
pub fn lyapunov_f(cfg: &ChainConfig, reference: &ReferenceMeasureSpec, b: f64, s: &State) -> Result<f64> {
    check(cfg, reference, s)?;
    let mut f = 0.0;
    for i in 0..cfg.n() {
        f += 0.5 * reference.beta[i] * local_energy(cfg, s, i)? + b * s.q[i] * s.p[i];
    }
    Ok(f)
}

/// Closed-form `Phi`. With `beta_i T_i = 1` on thermostated sites it reads
///
/// `sum_i [(gamma_i/4T_i - b) p_i^2 + b q_i dH/dq_i - gamma_i T_i b^2 q_i^2 - gamma_i/2 - b q_i D_i]
///  - (1/2) sum_bonds (beta_i - beta_{i+1} + theta_i) j_i`
///
/// where `D_i` is the drive force. The general-`beta` form is evaluated here.
pub fn lyapunov_phi(cfg: &ChainConfig, reference: &ReferenceMeasureSpec, b: f64, s: &State) -> Result<f64> {
    check(cfg, reference, s)?;
    let n = cfg.n();
    let (q, p, beta) = (&s.q, &s.p, &reference.beta);
    let mut grad = vec![0.0; n];
    grad_q_hamiltonian(cfg, q, &mut grad);
    let mut force = vec![0.0; n];
    conservative_and_drive_force(cfg, q, &mut force);

    let mut phi = 0.0;
    for i in 0..n {
        let (g, t) = (cfg.gamma()[i], cfg.temperature()[i]);
        let drive = force[i] + grad[i];
        phi += 0.5 * g * beta[i] * p[i] * p[i] - 0.5 * g * t * beta[i] - b * p[i] * p[i] + b * g * q[i] * p[i]
            + b * q[i] * grad[i]
            - b * q[i] * drive
            - g * t * (0.25 * beta[i] * beta[i] * p[i] * p[i] + b * beta[i] * q[i] * p[i] + b * b * q[i] * q[i])
            - 0.5 * beta[i] * drive * p[i];
    }
    for bond in 0..cfg.n_bonds() {
        let (i, k) = bond_sites(cfg, bond);
        phi -= 0.5 * (beta[i] - beta[k]) * current_unchecked(cfg, q, p, bond);
    }
    Ok(phi)
}

/// `inf_i min(delta/(gamma_i T+ + T+^2), gamma_i/(8 T+)) > b`.
pub fn b_is_admissible(cfg: &ChainConfig, b: f64) -> bool {
    b > 0.0 && b < cfg.lyapunov_b_bound()
}

/// Coercivity reference `sum_i p_i^2 + V(q_i) + sum_bonds U(stretch)`.
pub fn coercive_energy(cfg: &ChainConfig, s: &State) -> f64 {
    let pot = cfg.potential();
    let mut e: f64 = (0..cfg.n()).map(|i| s.p[i] * s.p[i] + pot.v(s.q[i])).sum();
    for bond in energy_bonds(cfg) {
        let l = bond.left.map_or(0.0, |i| s.q[i]);
        let r = bond.right.map_or(0.0, |i| s.q[i]);
        e += pot.u(l - r);
    }
    e
}

/// Constants of the bound `Phi >= c1 * E - c2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LyapunovFit {
    pub c1: f64,
    pub c2: f64,
}

/// Fits `(c1, c2)` on a probe set: `c2` is fixed from the worst value of
/// `-Phi`, then `c1` is the largest slope satisfied on all probes, halved.
pub fn fit_lyapunov_constants(
    cfg: &ChainConfig,
    reference: &ReferenceMeasureSpec,
    b: f64,
    probes: &[State],
) -> Result<LyapunovFit> {
    let values = probes
        .iter()
        .map(|s| Ok((lyapunov_phi(cfg, reference, b, s)?, coercive_energy(cfg, s))))
        .collect::<Result<Vec<_>>>()?;
    let worst = values.iter().map(|(phi, _)| -phi).fold(0.0, f64::max);
    let c2 = 2.0 * worst + cfg.gamma().iter().sum::<f64>();
    let c1 = values
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(phi, e)| (phi + c2) / e)
        .fold(f64::INFINITY, f64::min);
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::Numerical(format!("no positive coercivity constant on the probe set (c1 = {c1})")));
    }
    Ok(LyapunovFit { c1: 0.5 * c1, c2 })
}

/// Counts states violating `Phi >= c1 E - c2`.
pub fn count_violations(
    cfg: &ChainConfig,
    reference: &ReferenceMeasureSpec,
    b: f64,
    fit: LyapunovFit,
    states: &[State],
) -> Result<usize> {
    let mut bad = 0;
    for s in states {
        if lyapunov_phi(cfg, reference, b, s)? < fit.c1 * coercive_energy(cfg, s) - fit.c2 {
            bad += 1;
        }
    }
    Ok(bad)
}

/// Random states with Gaussian directions and log-uniform radii in `[1e-2, 1e3]`.
pub fn sample_probe_states<R: Rng>(n: usize, count: usize, rng: &mut R) -> Vec<State> {
    (0..count)
        .map(|_| {
            let radius = 10f64.powf(rng.gen_range(-2.0..3.0));
            let x: Vec<f64> = (0..2 * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            State::from_slice(&x.iter().map(|v| radius * v / norm).collect::<Vec<_>>())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{drift, Boundary, PotentialSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gradient_cfg(gamma: Vec<f64>) -> ChainConfig {
        ChainConfig::new(4, Boundary::Open, PotentialSpec::harmonic(1.0, 1.0), gamma, vec![1.0, 1.2, 1.4, 1.5], vec![0.1, -0.2, 0.3, 0.0], 0.0)
            .unwrap()
    }

    /// `-L F - sum gamma T (dF/dp)^2` by central differences of `F`.
    fn phi_by_differences(cfg: &ChainConfig, r: &ReferenceMeasureSpec, b: f64, s: &State) -> f64 {
        let n = cfg.n();
        let x = s.to_vec();
        let f = |x: &[f64]| lyapunov_f(cfg, r, b, &State::from_slice(x)).unwrap();
        let d = drift(cfg, s).unwrap();
        let h = 1e-4;
        let mut lf = 0.0;
        let mut noise = 0.0;
        for k in 0..2 * n {
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let (fp, fm, f0) = (f(&xp), f(&xm), f(&x));
            let first = (fp - fm) / (2.0 * h);
            lf += d[k] * first;
            if k >= n {
                let gt = cfg.gamma()[k - n] * cfg.temperature()[k - n];
                lf += gt * (fp - 2.0 * f0 + fm) / (h * h);
                noise += gt * first * first;
            }
        }
        -lf - noise
    }

    #[test]
    fn closed_form_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for cfg in [gradient_cfg(vec![1.0, 0.5, 0.0, 2.0]), ChainConfig::harmonic_uniform(5, Boundary::Periodic, 0.8, 1.1, 0.7, 1.3, 0.15).unwrap()] {
            let r = ReferenceMeasureSpec::from_config(&cfg);
            for _ in 0..50 {
                let s = State::from_slice(&(0..2 * cfg.n()).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<_>>());
                let a = lyapunov_phi(&cfg, &r, 0.03, &s).unwrap();
                let e = phi_by_differences(&cfg, &r, 0.03, &s);
                assert!((a - e).abs() < 1e-6 * a.abs().max(1.0), "{a} vs {e}");
            }
        }
    }

    #[test]
    fn hand_values() {
        let cfg = ChainConfig::harmonic_uniform(1, Boundary::Open, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let r = ReferenceMeasureSpec::from_config(&cfg);
        let s = State::new(vec![1.0], vec![1.0]).unwrap();
        assert!((lyapunov_f(&cfg, &r, 0.1, &s).unwrap() - 0.85).abs() < 1e-15);
        assert_eq!(lyapunov_f(&cfg, &r, 0.1, &State::zeros(1)).unwrap(), 0.0);
        let cfg = ChainConfig::harmonic_uniform(1, Boundary::Open, 1.0, 1.0, 0.6, 1.0, 0.0).unwrap();
        assert!((lyapunov_phi(&cfg, &r, 0.05, &State::zeros(1)).unwrap() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn grows_quadratically_along_rays() {
        let cfg = gradient_cfg(vec![1.0, 0.5, 0.8, 2.0]);
        let r = ReferenceMeasureSpec::from_config(&cfg);
        let b = 0.5 * cfg.lyapunov_b_bound();
        assert!(b_is_admissible(&cfg, b));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in sample_probe_states(4, 20, &mut rng) {
            let c = 1e4;
            let far = State { q: s.q.iter().map(|x| c * x).collect(), p: s.p.iter().map(|x| c * x).collect() };
            assert!(lyapunov_phi(&cfg, &r, b, &far).unwrap() / (c * c) > 0.0);
        }
    }

    #[test]
    fn fitted_bound_holds_on_fresh_states() {
        let cfg = gradient_cfg(vec![1.0, 0.5, 0.8, 2.0]);
        let r = ReferenceMeasureSpec::from_config(&cfg);
        let b = 0.5 * cfg.lyapunov_b_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let probes = sample_probe_states(4, 2000, &mut rng);
        let fit = fit_lyapunov_constants(&cfg, &r, b, &probes).unwrap();
        let fresh = sample_probe_states(4, 5000, &mut rng);
        assert_eq!(count_violations(&cfg, &r, b, fit, &fresh).unwrap(), 0);
    }
}
