//! Single harmonic oscillator `H = p^2/2 + omega^2 q^2/2` in a bath at `T`,
//! and Gaussian measures `exp(-a p^2/2 - b omega^2 q^2/2)`.

use crate::error::{Error, Result};
use crate::numerics::golden_section_min;
use crate::poly::{GaussianMoments, Poly};

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Precondition(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Dynamical activity `K = ((b - a)/a)^2 omega^2 / (4 gamma T b)`.
pub fn single_oscillator_k(a: f64, b: f64, gamma: f64, temperature: f64, omega: f64) -> Result<f64> {
    positive("a", a)?;
    positive("b", b)?;
    positive("gamma", gamma)?;
    positive("T", temperature)?;
    let r = (b - a) / a;
    Ok(r * r * omega * omega / (4.0 * gamma * temperature * b))
}

/// Entropy production `s = gamma T (a - beta)^2 / a`.
pub fn single_oscillator_s(a: f64, beta: f64, gamma: f64, temperature: f64) -> Result<f64> {
    positive("a", a)?;
    Ok(gamma * temperature * (a - beta).powi(2) / a)
}

/// `I = s/4 + K` with `beta = 1/T`.
pub fn single_oscillator_i(a: f64, b: f64, gamma: f64, temperature: f64, omega: f64) -> Result<f64> {
    Ok(0.25 * single_oscillator_s(a, 1.0 / temperature, gamma, temperature)?
        + single_oscillator_k(a, b, gamma, temperature, omega)?)
}

/// `K` from its variational definition `-inf_W <Gamma(W,W)>/8 + <L_A W>/2`
/// over the bilinear ansatz `W = w p q`, with exact Gaussian moments and a
/// one-dimensional minimization over `w`.
pub fn single_oscillator_k_variational(a: f64, b: f64, gamma: f64, temperature: f64, omega: f64) -> Result<f64> {
    positive("a", a)?;
    positive("b", b)?;
    positive("gamma", gamma)?;
    positive("T", temperature)?;
    positive("omega", omega)?;
    let (q, p) = (Poly::var(2, 0), Poly::var(2, 1));
    let mut moments = GaussianMoments::new(vec![vec![1.0 / (b * omega * omega), 0.0], vec![0.0, 1.0 / a]]);
    let pq = p.mul(&q);
    // L_A = p d/dq - omega^2 q d/dp ; Gamma(W, W) = 2 gamma T (dW/dp)^2
    let la = p.mul(&pq.derivative(0)).add(&q.mul(&pq.derivative(1)).scale(-omega * omega));
    let dp = pq.derivative(1);
    let gamma_w = dp.mul(&dp).scale(2.0 * gamma * temperature);
    let (e_gamma, e_la) = (moments.expect(&gamma_w), moments.expect(&la));
    let objective = |w: f64| w * w * e_gamma / 8.0 + 0.5 * w * e_la;
    let (_, min) = golden_section_min(objective, -100.0, 100.0, 1e-14);
    Ok(-min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_value() {
        assert!((single_oscillator_k(1.0, 2.0, 1.0, 1.0, 1.0).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn equipartition_has_no_activity() {
        assert_eq!(single_oscillator_k(0.7, 0.7, 2.0, 1.5, 3.0).unwrap(), 0.0);
        assert_eq!(single_oscillator_i(1.0, 1.0, 2.0, 1.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn variational_oracle_agrees() {
        for (a, b, g, t, w) in [(1.0, 2.0, 1.0, 1.0, 1.0), (0.5, 0.8, 2.0, 1.5, 0.7), (3.0, 1.0, 0.4, 0.6, 2.0)] {
            let k = single_oscillator_k(a, b, g, t, w).unwrap();
            assert!((single_oscillator_k_variational(a, b, g, t, w).unwrap() - k).abs() < 1e-6 * k.max(1e-3), "{a} {b}");
        }
    }

    #[test]
    fn rejects_non_positive() {
        assert!(single_oscillator_k(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(single_oscillator_k(1.0, -1.0, 1.0, 1.0, 1.0).is_err());
    }
}
