use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaMethod {
    /// Adaptive Simpson quadrature of the Brillouin-zone integral.
    Quadrature,
    ClosedForm,
    /// Periodic trapezoid sum over the `N` lattice modes.
    DiscreteSum(usize),
}

fn check(omega0: f64, omega: f64, gamma: f64) -> Result<()> {
    if !(omega0 >= 0.0 && omega > 0.0 && gamma > 0.0) || ![omega0, omega, gamma].iter().all(|x| x.is_finite()) {
        return Err(Error::Config(format!(
            "conductivity needs omega0 >= 0, omega > 0, gamma > 0 (got {omega0}, {omega}, {gamma})"
        )));
    }
    Ok(())
}

fn integrand(omega0: f64, omega: f64, x: f64) -> f64 {
    let s_half = (PI * x).sin();
    let w2 = omega0 * omega0 + 4.0 * omega * omega * s_half * s_half;
    // sin^2(2 pi x) / w2 with the removable singularity at x = 0 when omega0 = 0
    let cos_half = (PI * x).cos();
    if omega0 == 0.0 {
        return cos_half * cos_half / (omega * omega);
    }
    let s = 2.0 * s_half * cos_half;
    s * s / w2
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Conductivity `kappa = (omega^4/gamma) int_{-1/2}^{1/2} sin^2(2 pi x) / omega(x)^2 dx`
/// with the normal-mode dispersion `omega(x)^2 = omega0^2 + 4 omega^2 sin^2(pi x)`.
/// `N <J>` tends to `kappa N tau` for large `N`.
pub fn conductivity_kappa(omega0: f64, omega: f64, gamma: f64, method: KappaMethod) -> Result<f64> {
    check(omega0, omega, gamma)?;
    let pre = omega.powi(4) / gamma;
    Ok(match method {
        KappaMethod::Quadrature => {
            let f = |x: f64| integrand(omega0, omega, x);
            // the integrand is even
            pre * 2.0 * adaptive_simpson(&f, 0.0, 0.5, 1e-15)
        }
        KappaMethod::ClosedForm => {
            let (a, b) = (omega0 * omega0, 4.0 * omega * omega);
            pre * (2.0 / b + 4.0 * (a - (a * (a + b)).sqrt()) / (b * b))
        }
        KappaMethod::DiscreteSum(n) => {
            if n == 0 {
                return Err(Error::Config("DiscreteSum needs N >= 1".into()));
            }
            let sum: f64 = (0..n).map(|k| integrand(omega0, omega, k as f64 / n as f64)).sum();
            pre * sum / n as f64
        }
    })
}

/// Large-`N` limit of `N F(lambda'/N, tau'/N)`: `kappa (lambda' tau' + lambda'^2 T^2)`.
pub fn scaled_limit_f(lambda_prime: f64, tau_prime: f64, temperature: f64, omega0: f64, omega: f64, gamma: f64) -> Result<f64> {
    let kappa = conductivity_kappa(omega0, omega, gamma, KappaMethod::ClosedForm)?;
    Ok(kappa * (lambda_prime * tau_prime + lambda_prime * lambda_prime * temperature * temperature))
}
