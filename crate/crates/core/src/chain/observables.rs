//! Energies, currents, drift and entropy-production observables.
//!
//! Sites are indexed `0..N`. Bond `i` joins sites `i` and `i + 1` (modulo `N`
//! for Periodic chains); its stretch is `r_i = q_i - q_{i+1}`. Open chains
//! additionally couple the end sites to fixed walls through half-weight bonds,
//! so that `H = sum_i h_i` holds exactly.

use super::config::{Boundary, ChainConfig, ReferenceMeasureSpec, State};
use crate::error::{Error, Result};

/// A bond of the energy function: left/right site (`None` is a wall at rest)
/// and its weight in `H`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct EnergyBond {
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub weight: f64,
}

pub(crate) fn energy_bonds(cfg: &ChainConfig) -> Vec<EnergyBond> {
    let n = cfg.n();
    match cfg.boundary() {
        Boundary::Periodic => (0..n)
            .map(|i| EnergyBond { left: Some(i), right: Some((i + 1) % n), weight: 1.0 })
            .collect(),
        Boundary::Open => {
            let mut bonds = vec![EnergyBond { left: None, right: Some(0), weight: 0.5 }];
            bonds.extend((0..n - 1).map(|i| EnergyBond { left: Some(i), right: Some(i + 1), weight: 1.0 }));
            bonds.push(EnergyBond { left: Some(n - 1), right: None, weight: 0.5 });
            bonds
        }
    }
}

/// Sites `(i, i+1)` of current-carrying bond `b`.
pub(crate) fn bond_sites(cfg: &ChainConfig, b: usize) -> (usize, usize) {
    (b, (b + 1) % cfg.n())
}

fn check_dims(cfg: &ChainConfig, s: &State) -> Result<()> {
    if s.q.len() != cfg.n() || s.p.len() != cfg.n() {
        return Err(Error::Dimension { expected: cfg.n(), got: s.q.len().max(s.p.len()) });
    }
    Ok(())
}

#[inline]
fn at(q: &[f64], i: Option<usize>) -> f64 {
    i.map_or(0.0, |i| q[i])
}

fn neighbours(cfg: &ChainConfig, q: &[f64], i: usize) -> (f64, f64) {
    let n = cfg.n();
    match cfg.boundary() {
        Boundary::Periodic => (q[(i + n - 1) % n], q[(i + 1) % n]),
        Boundary::Open => {
            let left = if i == 0 { 0.0 } else { q[i - 1] };
            let right = if i + 1 == n { 0.0 } else { q[i + 1] };
            (left, right)
        }
    }
}

pub fn hamiltonian(cfg: &ChainConfig, s: &State) -> Result<f64> {
    check_dims(cfg, s)?;
    let pot = cfg.potential();
    let mut h: f64 = s.p.iter().map(|p| 0.5 * p * p).sum::<f64>() + s.q.iter().map(|q| pot.v(*q)).sum::<f64>();
    for b in energy_bonds(cfg) {
        h += b.weight * pot.u(at(&s.q, b.left) - at(&s.q, b.right));
    }
    Ok(h)
}

/// `h_i = p_i^2/2 + V(q_i) + (U(q_i - q_{i+1}) + U(q_{i-1} - q_i)) / 2`.
pub fn local_energy(cfg: &ChainConfig, s: &State, i: usize) -> Result<f64> {
    check_dims(cfg, s)?;
    if i >= cfg.n() {
        return Err(Error::Index { index: i, valid: format!("0..{}", cfg.n()) });
    }
    let pot = cfg.potential();
    let (left, right) = neighbours(cfg, &s.q, i);
    let q = s.q[i];
    Ok(0.5 * s.p[i] * s.p[i] + pot.v(q) + 0.5 * (pot.u(q - right) + pot.u(left - q)))
}

/// `j_i = -U'(q_i - q_{i+1}) (p_i + p_{i+1}) / 2` on bond `i`.
pub fn local_current(cfg: &ChainConfig, s: &State, i: usize) -> Result<f64> {
    check_dims(cfg, s)?;
    if i >= cfg.n_bonds() {
        return Err(Error::Index { index: i, valid: format!("bonds 0..{}", cfg.n_bonds()) });
    }
    Ok(current_unchecked(cfg, &s.q, &s.p, i))
}

#[inline]
pub(crate) fn current_unchecked(cfg: &ChainConfig, q: &[f64], p: &[f64], b: usize) -> f64 {
    let (i, k) = bond_sites(cfg, b);
    -0.5 * cfg.potential().du(q[i] - q[k]) * (p[i] + p[k])
}

/// `J = (1/N) sum_i j_i` over current-carrying bonds.
pub fn mean_current(cfg: &ChainConfig, s: &State) -> Result<f64> {
    check_dims(cfg, s)?;
    Ok(mean_current_unchecked(cfg, &s.q, &s.p))
}

pub(crate) fn mean_current_unchecked(cfg: &ChainConfig, q: &[f64], p: &[f64]) -> f64 {
    (0..cfg.n_bonds()).map(|b| current_unchecked(cfg, q, p, b)).sum::<f64>() / cfg.n() as f64
}

/// Writes `dH/dq_i` into `out`.
pub(crate) fn grad_q_hamiltonian(cfg: &ChainConfig, q: &[f64], out: &mut [f64]) {
    let pot = cfg.potential();
    for (o, qi) in out.iter_mut().zip(q) {
        *o = pot.dv(*qi);
    }
    for b in energy_bonds(cfg) {
        let f = b.weight * pot.du(at(q, b.left) - at(q, b.right));
        if let Some(l) = b.left {
            out[l] += f;
        }
        if let Some(r) = b.right {
            out[r] -= f;
        }
    }
}

/// Deterministic momentum force: `-dH/dq_i - T_i (theta_{i-1} U'(q_{i-1}-q_i) + theta_i U'(q_i-q_{i+1})) / 2`.
/// Friction is excluded.
pub(crate) fn conservative_and_drive_force(cfg: &ChainConfig, q: &[f64], out: &mut [f64]) {
    grad_q_hamiltonian(cfg, q, out);
    for o in out.iter_mut() {
        *o = -*o;
    }
    if !cfg.is_driven() {
        return;
    }
    let pot = cfg.potential();
    let temps = cfg.temperature();
    for b in 0..cfg.n_bonds() {
        let theta = cfg.bond_theta(b);
        if theta == 0.0 {
            continue;
        }
        let (i, k) = bond_sites(cfg, b);
        let du = theta * pot.du(q[i] - q[k]);
        // bond b enters site i as theta_i and site i+1 as theta_{(i+1)-1}
        out[i] -= 0.5 * temps[i] * du;
        out[k] -= 0.5 * temps[k] * du;
    }
}

/// `(dq/dt, deterministic dp/dt)` of the thermostated, driven dynamics.
pub fn drift(cfg: &ChainConfig, s: &State) -> Result<Vec<f64>> {
    check_dims(cfg, s)?;
    let n = cfg.n();
    let mut out = vec![0.0; 2 * n];
    out[..n].copy_from_slice(&s.p);
    conservative_and_drive_force(cfg, &s.q, &mut out[n..]);
    for i in 0..n {
        out[n + i] -= cfg.gamma()[i] * s.p[i];
    }
    Ok(out)
}

/// `sigma = sum_bonds (beta_i - beta_{i+1} + theta_i) j_i`.
pub fn sigma_value(cfg: &ChainConfig, reference: &ReferenceMeasureSpec, s: &State) -> Result<f64> {
    check_dims(cfg, s)?;
    if reference.beta.len() != cfg.n() {
        return Err(Error::Dimension { expected: cfg.n(), got: reference.beta.len() });
    }
    Ok(sigma_unchecked(cfg, &reference.beta, &s.q, &s.p))
}

pub(crate) fn sigma_unchecked(cfg: &ChainConfig, beta: &[f64], q: &[f64], p: &[f64]) -> f64 {
    (0..cfg.n_bonds())
        .map(|b| {
            let (i, k) = bond_sites(cfg, b);
            (beta[i] - beta[k] + cfg.bond_theta(b)) * current_unchecked(cfg, q, p, b)
        })
        .sum()
}

/// Momentum reversal `(q, p) -> (q, -p)`.
pub fn momentum_reversal(s: &State) -> State {
    State { q: s.q.clone(), p: s.p.iter().map(|p| -p).collect() }
}
