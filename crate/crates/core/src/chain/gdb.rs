//! Exact verification of the generalized detailed balance identity
//! `L*_rho = Pi L Pi + sigma` on polynomial test functions.

use nalgebra::DMatrix;

use super::config::{ChainConfig, ReferenceMeasureSpec, State};
use super::observables::{drift, local_energy, sigma_unchecked};
use crate::error::{Error, Result};
use crate::poly::{GaussianMoments, Poly};

/// Polynomial test functions `f, g` used by [`check_gdb`]: every monomial in
/// `(q, p)` of total degree `1..=max_degree`, normalized to unit second
/// moment under the reference measure.
#[derive(Clone, Copy, Debug)]
pub struct TestFamily {
    pub max_degree: u32,
}

impl Default for TestFamily {
    fn default() -> Self {
        TestFamily { max_degree: 4 }
    }
}

/// Largest violation of `<f L g> = <g (Pi L Pi + sigma) f>` under `rho_beta`,
/// with `sigma` built from the configuration.
pub fn check_gdb(cfg: &ChainConfig, reference: &ReferenceMeasureSpec, family: TestFamily) -> Result<f64> {
    let beta = reference.beta.clone();
    check_gdb_with_sigma(cfg, reference, family, move |c, s| sigma_unchecked(c, &beta, &s.q, &s.p))
}

/// As [`check_gdb`] with a caller-supplied quadratic `sigma` (negative controls).
pub fn check_gdb_with_sigma(
    cfg: &ChainConfig,
    reference: &ReferenceMeasureSpec,
    family: TestFamily,
    sigma: impl Fn(&ChainConfig, &State) -> f64,
) -> Result<f64> {
    if !cfg.potential().is_harmonic() {
        return Err(Error::Precondition("generalized detailed balance check needs a harmonic potential".into()));
    }
    reference.check_matches(cfg)?;
    let n = cfg.n();
    let nv = 2 * n;
    let as_state = |x: &[f64]| State::from_slice(x);

    let drift_polys: Vec<Poly> = (0..nv)
        .map(|k| Poly::from_linear_fn(nv, |x| drift(cfg, &as_state(x)).expect("dimensions")[k]))
        .collect();
    let sigma_poly = Poly::from_quadratic_fn(nv, |x| sigma(cfg, &as_state(x)));
    let diffusion: Vec<f64> = (0..n).map(|i| cfg.gamma()[i] * cfg.temperature()[i]).collect();
    let momenta: Vec<usize> = (n..nv).collect();

    let generator = |g: &Poly| -> Poly {
        let mut out = Poly::zero(nv);
        for (k, b) in drift_polys.iter().enumerate() {
            out = out.add(&b.mul(&g.derivative(k)));
        }
        for (i, d) in diffusion.iter().enumerate() {
            if *d != 0.0 {
                out = out.add(&g.derivative(n + i).derivative(n + i).scale(*d));
            }
        }
        out
    };

    // log-density of rho_beta is -x^T P x / 2
    let energy = Poly::from_quadratic_fn(nv, |x| {
        let s = as_state(x);
        (0..n).map(|i| reference.beta[i] * local_energy(cfg, &s, i).expect("dimensions")).sum()
    });
    let mut precision = DMatrix::<f64>::zeros(nv, nv);
    for (e, c) in energy.terms() {
        let idx: Vec<usize> = (0..nv).filter(|&i| e[i] > 0).collect();
        match idx.as_slice() {
            [i] => precision[(*i, *i)] += 2.0 * c,
            [i, k] => {
                precision[(*i, *k)] += c;
                precision[(*k, *i)] += c;
            }
            _ => unreachable!("quadratic form"),
        }
    }
    let covariance = precision
        .cholesky()
        .ok_or_else(|| Error::Precondition("reference measure is not normalizable (energy not positive definite)".into()))?
        .inverse();
    let cov_rows: Vec<Vec<f64>> = (0..nv).map(|i| (0..nv).map(|k| covariance[(i, k)]).collect()).collect();
    let mut moments = GaussianMoments::new(cov_rows);

    let tests: Vec<Poly> = Poly::monomials_up_to(nv, family.max_degree)
        .into_iter()
        .map(|e| {
            let m = Poly::monomial(e, 1.0);
            let norm = moments.expect(&m.mul(&m)).sqrt();
            m.scale(1.0 / norm)
        })
        .collect();
    let l_tests: Vec<Poly> = tests.iter().map(&generator).collect();
    let adjoint_tests: Vec<Poly> = tests
        .iter()
        .map(|f| generator(&f.reflect(&momenta)).reflect(&momenta).add(&sigma_poly.mul(f)))
        .collect();

    let mut residual: f64 = 0.0;
    for (f, adj_f) in tests.iter().zip(&adjoint_tests) {
        for (g, l_g) in tests.iter().zip(&l_tests) {
            let lhs = moments.expect(&f.mul(l_g));
            let rhs = moments.expect(&g.mul(adj_f));
            residual = residual.max((lhs - rhs).abs());
        }
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{Boundary, PotentialSpec};

    #[test]
    fn single_site_equilibrium() {
        let cfg = ChainConfig::harmonic_uniform(1, Boundary::Open, 1.0, 1.0, 1.0, 1.5, 0.0).unwrap();
        let r = ReferenceMeasureSpec::from_config(&cfg);
        assert!(check_gdb(&cfg, &r, TestFamily::default()).unwrap() < 1e-12);
    }

    fn two_temperatures() -> ChainConfig {
        ChainConfig::new(2, Boundary::Open, PotentialSpec::harmonic(1.0, 1.0), vec![1.0; 2], vec![1.0, 2.0], vec![0.0; 2], 0.0)
            .unwrap()
    }

    #[test]
    fn boundary_gradient_balances() {
        let cfg = two_temperatures();
        let r = ReferenceMeasureSpec::new(vec![1.0, 0.5]).unwrap();
        assert!(check_gdb(&cfg, &r, TestFamily::default()).unwrap() < 1e-10);
    }

    #[test]
    fn zero_sigma_is_detected() {
        let cfg = two_temperatures();
        let r = ReferenceMeasureSpec::new(vec![1.0, 0.5]).unwrap();
        let res = check_gdb_with_sigma(&cfg, &r, TestFamily::default(), |_, _| 0.0).unwrap();
        assert!(res > 1e-3, "{res}");
    }

    #[test]
    fn periodic_drive_balances() {
        let cfg = ChainConfig::harmonic_uniform(3, Boundary::Periodic, 1.0, 0.8, 0.7, 1.3, 0.2).unwrap();
        let r = ReferenceMeasureSpec::from_config(&cfg);
        assert!(check_gdb(&cfg, &r, TestFamily { max_degree: 2 }).unwrap() < 1e-10);
    }

    #[test]
    fn mismatched_reference_is_rejected() {
        let cfg = two_temperatures();
        let r = ReferenceMeasureSpec::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(check_gdb(&cfg, &r, TestFamily::default()), Err(Error::ReferenceMismatch { site: 1, .. })));
    }
}
