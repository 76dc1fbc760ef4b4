//! Principal eigenvalue of the tilted generator `L + N lambda J` of the linear
//! (harmonic) chain.
//!
//! With `dx = A x dt + noise` of covariance `D dt` and `N J = x^T C x`, the
//! quadratic ansatz `psi = exp(x^T X x / 2)` turns the eigenvalue problem into
//! the algebraic Riccati equation
//!
//! `X D X + X A + A^T X + 2 lambda C = 0`,  eigenvalue `tr(D X) / 2`,
//!
//! whose stabilizing solution (`A + D X` Hurwitz) is read off the stable
//! invariant subspace of the Hamiltonian matrix `[[A, D], [-2 lambda C, -A^T]]`.
//! The subspace is obtained from the matrix sign function; a few Newton steps
//! on the Riccati residual then polish the solution.

use nalgebra::DMatrix;

use crate::chain::{drift, mean_current, Boundary, ChainConfig, State};
use crate::error::{Error, Result};
use crate::poly::Poly;

#[derive(Clone, Debug)]
pub struct LinearSystem {
    /// Drift matrix in `(q, p)` coordinates, friction and drive included.
    pub a: DMatrix<f64>,
    /// Diffusion matrix, `2 gamma_i T_i` on the momentum block.
    pub d: DMatrix<f64>,
    /// Symmetric quadratic form with `x^T C x = N J(x)`.
    pub c: DMatrix<f64>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Assembles the linear SDE of a harmonic chain from its drift and current.
pub fn linear_system_from_config(cfg: &ChainConfig) -> Result<LinearSystem> {
    if !cfg.potential().is_harmonic() {
        return Err(Error::Precondition("the tilted-generator oracle needs a harmonic potential".into()));
    }
    let n = cfg.n();
    let dim = 2 * n;
    let mut a = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut x = vec![0.0; dim];
        x[j] = 1.0;
        let col = drift(cfg, &State::from_slice(&x))?;
        for i in 0..dim {
            a[(i, j)] = col[i];
        }
    }
    let mut d = DMatrix::zeros(dim, dim);
    for i in 0..n {
        d[(n + i, n + i)] = 2.0 * cfg.gamma()[i] * cfg.temperature()[i];
    }
    let total_current = Poly::from_quadratic_fn(dim, |x| n as f64 * mean_current(cfg, &State::from_slice(x)).expect("dimensions"));
    let mut c = DMatrix::zeros(dim, dim);
    for (e, coeff) in total_current.terms() {
        let idx: Vec<usize> = (0..dim).filter(|&i| e[i] > 0).collect();
        match idx.as_slice() {
            [i] => c[(*i, *i)] += coeff,
            [i, k] => {
                c[(*i, *k)] += 0.5 * coeff;
                c[(*k, *i)] += 0.5 * coeff;
            }
            _ => unreachable!("quadratic form"),
        }
    }
    Ok(LinearSystem { a, d, c })
}

/// Uniform harmonic periodic chain driven by `tau`.
pub fn build_linear_system(n: usize, temperature: f64, omega0: f64, omega: f64, gamma: f64, tau: f64) -> Result<LinearSystem> {
    let cfg = ChainConfig::harmonic_uniform(n, Boundary::Periodic, omega0, omega, gamma, temperature, tau)?;
    linear_system_from_config(&cfg)
}

#[derive(Clone, Debug)]
pub struct RiccatiSolution {
    pub x: DMatrix<f64>,
    pub scgf: f64,
    /// Smallest `|Re z|` over the Hamiltonian spectrum.
    pub margin: f64,
    /// Frobenius norm of the Riccati residual.
    pub residual: f64,
}

fn riccati_residual(sys: &LinearSystem, q: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    x * &sys.d * x + x * &sys.a + sys.a.transpose() * x + q
}

fn max_real_part(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Matrix sign function by scaled Newton iteration.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    let mut z = h.clone();
    for it in 0..100 {
        let lu = z.clone().lu();
        let inv = lu.try_inverse().ok_or_else(|| Error::Numerical("singular iterate in matrix sign function".into()))?;
        let scale = if it < 8 {
            let log_det: f64 = z.clone().lu().u().diagonal().iter().map(|v| v.abs().ln()).sum();
            (-log_det / n as f64).exp()
        } else {
            1.0
        };
        let next = (&z * scale + &inv / scale) * 0.5;
        let change = (&next - &z).norm();
        z = next;
        if change <= 1e-14 * z.norm() {
            return Ok(z);
        }
    }
    Err(Error::Numerical("matrix sign iteration did not converge".into()))
}

/// Solves `F^T E + E F = -R` through the Kronecker form.
fn solve_lyapunov(f: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = f.nrows();
    let ft = f.transpose();
    let mut k = DMatrix::zeros(n * n, n * n);
    // column-major vec: vec(F^T E) = (I (x) F^T) vec(E), vec(E F) = (F^T (x) I) vec(E)
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for l in 0..n {
                k[(row, j * n + l)] += ft[(i, l)];
                k[(row, l * n + i)] += f[(l, j)];
            }
        }
    }
    let rhs = DMatrix::from_iterator(n * n, 1, r.iter().map(|v| -v));
    let sol = k.lu().solve(&rhs)?;
    Some(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

const REFINE_MAX_DIM: usize = 40;

pub fn solve_tilted_riccati(sys: &LinearSystem, lambda: f64) -> Result<RiccatiSolution> {
    let n = sys.dim();
    if sys.d.nrows() != n || sys.c.nrows() != n {
        return Err(Error::Dimension { expected: n, got: sys.c.nrows() });
    }
    let q = &sys.c * (2.0 * lambda);
    let mut ham = DMatrix::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    ham.view_mut((0, n), (n, n)).copy_from(&sys.d);
    ham.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    ham.view_mut((n, n), (n, n)).copy_from(&(-sys.a.transpose()));

    let eig = ham.complex_eigenvalues();
    let margin = eig.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let scale = ham.norm().max(1.0);
    let stable = eig.iter().filter(|z| z.re < 0.0).count();
    if margin < 1e-10 * scale || stable != n {
        return Err(Error::RiccatiDivergent {
            margin,
            reason: format!("{stable} of {} Hamiltonian eigenvalues are stable", 2 * n),
        });
    }

    let w = matrix_sign(&ham)?;
    let id = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w.view((n, n), (n, n)) + &id));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w.view((0, 0), (n, n)) + &id)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let qr = lhs.clone().qr();
    let qtb = qr.q().transpose() * &rhs;
    let mut x = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::RiccatiDivergent { margin, reason: "stable subspace is not a graph over the state block".into() })?;
    x = (&x + x.transpose()) * 0.5;

    let mut res = riccati_residual(sys, &q, &x).norm();
    if n <= REFINE_MAX_DIM {
        for _ in 0..3 {
            let r = riccati_residual(sys, &q, &x);
            let closed = &sys.a + &sys.d * &x;
            let Some(e) = solve_lyapunov(&closed, &r) else { break };
            let candidate = &x + (&e + e.transpose()) * 0.5;
            let cand_res = riccati_residual(sys, &q, &candidate).norm();
            if cand_res < res {
                x = candidate;
                res = cand_res;
            } else {
                break;
            }
        }
    }
    let tol = 1e-8 * (q.norm() + sys.a.norm() * x.norm() + 1e-300).max(1e-300);
    if !(res <= tol.max(1e-12)) {
        return Err(Error::Numerical(format!("Riccati residual {res:.3e} too large")));
    }
    if max_real_part(&(&sys.a + &sys.d * &x)) >= 0.0 {
        return Err(Error::RiccatiDivergent { margin, reason: "solution is not stabilizing".into() });
    }
    let scgf = 0.5 * (&sys.d * &x).trace();
    Ok(RiccatiSolution { x, scgf, margin, residual: res })
}

/// SCGF of `N lambda int J` as the principal eigenvalue of the tilted generator.
pub fn scgf_riccati(sys: &LinearSystem, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(solve_tilted_riccati(sys, lambda)?.scgf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{optimize_scgf, stationary_tilted_params, mean_current_gaussian, RingParams};
    use crate::chain::mean_current;

    #[test]
    fn untilted_spectrum_real_parts() {
        let sys = build_linear_system(5, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        for z in sys.a.complex_eigenvalues().iter() {
            assert!((z.re + 0.5).abs() < 1e-10, "{z}");
        }
    }

    #[test]
    fn current_form_is_traceless_and_exact() {
        let cfg = ChainConfig::harmonic_uniform(4, Boundary::Periodic, 0.5, 1.3, 1.0, 1.0, 0.1).unwrap();
        let sys = linear_system_from_config(&cfg).unwrap();
        assert!(sys.c.trace().abs() < 1e-15);
        let x = [0.3, -1.0, 0.2, 0.8, 1.1, -0.4, 0.0, 0.6];
        let v = nalgebra::DVector::from_column_slice(&x);
        let form = (v.transpose() * &sys.c * &v)[(0, 0)];
        let j = mean_current(&cfg, &State::from_slice(&x)).unwrap();
        assert!((form - 4.0 * j).abs() < 1e-14);
    }

    #[test]
    fn zero_tilt() {
        let sys = build_linear_system(3, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(scgf_riccati(&sys, 0.0).unwrap(), 0.0);
        assert!(solve_tilted_riccati(&sys, 0.0).unwrap().x.norm() < 1e-12);
    }

    #[test]
    fn quadratic_coefficient() {
        let sys = build_linear_system(3, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let l = 1e-3;
        let f = scgf_riccati(&sys, l).unwrap();
        assert!((f / (l * l) - 0.375).abs() / 0.375 < 1e-6, "{}", f / (l * l));
    }

    #[test]
    fn agrees_with_gaussian_optimum() {
        let ring = RingParams::new(5, 1.2, 0.8, 1.1, 0.9).unwrap();
        let sys = build_linear_system(5, 1.2, 0.8, 1.1, 0.9, 0.04).unwrap();
        for l in [-0.05, -0.01, 0.02, 0.06] {
            let a = scgf_riccati(&sys, l).unwrap();
            let b = optimize_scgf(&ring, l, 0.04).unwrap().f;
            assert!((a - b).abs() <= 1e-8 * b.abs(), "{l}: {a} vs {b}");
        }
    }

    #[test]
    fn gallavotti_cohen_symmetry_and_larger_ring() {
        let tau = 0.06;
        let sys = build_linear_system(11, 1.0, 1.0, 1.0, 1.0, tau).unwrap();
        let ring = RingParams::new(11, 1.0, 1.0, 1.0, 1.0).unwrap();
        for l in [-0.07, -0.02, 0.01, 0.03] {
            let a = scgf_riccati(&sys, l).unwrap();
            let b = scgf_riccati(&sys, -l - tau).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs(), "{l}: {a} vs {b}");
            let g = optimize_scgf(&ring, l, tau).unwrap().f;
            assert!((a - g).abs() <= 1e-8 * g.abs(), "{l}: {a} vs {g}");
        }
    }

    #[test]
    fn slope_at_zero_is_stationary_current() {
        let (tau, n) = (0.05, 5);
        let sys = build_linear_system(n, 1.0, 1.0, 1.0, 1.0, tau).unwrap();
        let h = 1e-4;
        let slope = (scgf_riccati(&sys, h).unwrap() - scgf_riccati(&sys, -h).unwrap()) / (2.0 * h);
        let ring = RingParams::new(n, 1.0, 1.0, 1.0, 1.0).unwrap();
        let stationary = n as f64 * mean_current_gaussian(&stationary_tilted_params(&ring, 0.0, tau).unwrap()).unwrap();
        assert!((slope - stationary).abs() < 1e-7 * stationary.abs(), "{slope} vs {stationary}");
    }

    #[test]
    fn scgf_is_basis_independent() {
        let sys = build_linear_system(5, 1.0, 1.0, 1.0, 1.0, 0.03).unwrap();
        let sol = solve_tilted_riccati(&sys, 0.02).unwrap();
        // orthogonal real Fourier basis acting identically on q and p blocks
        let n = 5;
        let mut f = DMatrix::zeros(n, n);
        for j in 0..n {
            f[(0, j)] = 1.0 / (n as f64).sqrt();
            for k in 1..=n / 2 {
                let th = 2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
                f[(2 * k - 1, j)] = (2.0 / n as f64).sqrt() * th.cos();
                f[(2 * k, j)] = (2.0 / n as f64).sqrt() * th.sin();
            }
        }
        let mut o = DMatrix::zeros(2 * n, 2 * n);
        o.view_mut((0, 0), (n, n)).copy_from(&f);
        o.view_mut((n, n), (n, n)).copy_from(&f);
        assert!((&o * o.transpose() - DMatrix::identity(2 * n, 2 * n)).norm() < 1e-12);
        let rotated = 0.5 * (&o * &sys.d * o.transpose() * (&o * &sol.x * o.transpose())).trace();
        assert!((rotated - sol.scgf).abs() < 1e-14);
    }

    #[test]
    fn far_tilt_is_divergent() {
        let sys = build_linear_system(3, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(matches!(scgf_riccati(&sys, 5.0), Err(Error::RiccatiDivergent { .. })));
    }
}
