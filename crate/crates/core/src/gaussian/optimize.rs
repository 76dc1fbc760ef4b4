use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::dual::D3;
use super::modes::{mode_delta, mode_objective, stationary_tilted_params, GaussianMeasureSpec, ModeParams, RingParams};
use crate::error::{Error, Result};

const GRAD_TOL: f64 = 1e-12;
const STAGNATION_GRAD_TOL: f64 = 1e-9;
const MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 60;
const ARMIJO: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct ScgfOptimum {
    #[serde(rename = "F")]
    pub f: f64,
    pub spec: GaussianMeasureSpec,
}

/// Maximizes the Gaussian functional `N lambda <J> - I^tau` mode by mode.
/// At `lambda = 0` the optimum is the stationary measure and `F = 0` exactly.
pub fn optimize_scgf(ring: &RingParams, lambda: f64, tau: f64) -> Result<ScgfOptimum> {
    ring.validate()?;
    if !lambda.is_finite() || !tau.is_finite() {
        return Err(Error::Config("lambda and tau must be finite".into()));
    }
    if lambda == 0.0 {
        return Ok(ScgfOptimum { f: 0.0, spec: stationary_tilted_params(ring, 0.0, tau)? });
    }
    let per_mode: Vec<(ModeParams, f64)> = (0..ring.n_modes())
        .into_par_iter()
        .map(|k| {
            if !ring.is_active(k) {
                return Ok((ModeParams::reference(k), 0.0));
            }
            optimize_mode(ring, k, lambda, tau).map(|(m, f)| (m, ring.multiplicity(k) * f))
        })
        .collect::<Result<_>>()?;
    let f = per_mode.iter().map(|(_, f)| f).sum();
    let modes = per_mode.into_iter().map(|(m, _)| m).collect();
    Ok(ScgfOptimum { f, spec: GaussianMeasureSpec { ring: *ring, modes } })
}

fn evaluate(ring: &RingParams, k: usize, x: &Vector3<f64>, lambda: f64, tau: f64) -> D3 {
    let (a, b, c) = (D3::variable(x[0], 0), D3::variable(x[1], 1), D3::variable(x[2], 2));
    let mut d = mode_objective(ring, k, a, b, c, lambda, tau);
    if ring.is_self_conjugate(k) {
        d.g[0] = 0.0;
        for i in 0..3 {
            d.h[0][i] = 0.0;
            d.h[i][0] = 0.0;
        }
        d.h[0][0] = -1.0;
    }
    d
}

fn value(ring: &RingParams, k: usize, x: &Vector3<f64>, lambda: f64, tau: f64) -> f64 {
    mode_objective(ring, k, x[0], x[1], x[2], lambda, tau)
}

fn admissible(ring: &RingParams, k: usize, x: &Vector3<f64>) -> bool {
    mode_delta(ring, &ModeParams { k, a: x[0], b: x[1], c: x[2] }).is_ok()
}

/// Damped Newton ascent from the reference point; Levenberg shift when the
/// Hessian is not negative definite, Armijo backtracking that never leaves
/// the positive-definite region.
fn optimize_mode(ring: &RingParams, k: usize, lambda: f64, tau: f64) -> Result<(ModeParams, f64)> {
    let mut x = Vector3::zeros();
    let out_of_basin = |reason: String| Error::OutOfBasin { k, reason };
    for _ in 0..MAX_ITER {
        let d = evaluate(ring, k, &x, lambda, tau);
        let g = Vector3::from(d.g);
        let gnorm = g.norm();
        if gnorm < GRAD_TOL {
            return Ok((ModeParams { k, a: x[0], b: x[1], c: x[2] }, d.v));
        }
        let neg_hess = -Matrix3::from_fn(|i, j| d.h[i][j]);
        let mut shift = 0.0;
        let step = loop {
            let m = neg_hess + Matrix3::identity() * shift;
            if let Some(ch) = m.cholesky() {
                break ch.solve(&g);
            }
            shift = if shift == 0.0 { 1e-10 * (1.0 + neg_hess.norm()) } else { shift * 10.0 };
            if !shift.is_finite() {
                return Err(out_of_basin("Hessian regularization failed".into()));
            }
        };
        let slope = g.dot(&step);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial = x + step * alpha;
            if admissible(ring, k, &trial) {
                let fv = value(ring, k, &trial, lambda, tau);
                let gain_ok = fv >= d.v + ARMIJO * alpha * slope;
                let flat = shift == 0.0 && (fv - d.v).abs() <= 1e-15 * d.v.abs().max(1e-300);
                if gain_ok || flat {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(next) => {
                if next == x {
                    break;
                }
                x = next;
            }
            None if gnorm < STAGNATION_GRAD_TOL => break,
            None => {
                return Err(out_of_basin(format!(
                    "backtracking could not stay inside the positive-definite region (gradient norm {gnorm:.3e})"
                )))
            }
        }
    }
    let d = evaluate(ring, k, &x, lambda, tau);
    let gnorm = Vector3::from(d.g).norm();
    if gnorm < STAGNATION_GRAD_TOL {
        Ok((ModeParams { k, a: x[0], b: x[1], c: x[2] }, d.v))
    } else {
        Err(out_of_basin(format!("Newton ascent did not converge (gradient norm {gnorm:.3e})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::modes::{functional_f, optimal_mode_coeffs_small_lambda};

    fn unit_ring(n: usize) -> RingParams {
        RingParams::new(n, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    /// `sum_k sin^2(2 pi k/N) / omega_k^2` over all Fourier indices.
    fn quadratic_coefficient(r: &RingParams) -> f64 {
        (0..r.n_modes()).map(|k| r.multiplicity(k) * r.current_weight(k).powi(2) / r.omega_k_sq(k)).sum()
    }

    #[test]
    fn zero_tilt_gives_reference() {
        let opt = optimize_scgf(&unit_ring(5), 0.0, 0.0).unwrap();
        assert_eq!(opt.f, 0.0);
        assert_eq!(opt.spec, GaussianMeasureSpec::reference(unit_ring(5)));
    }

    #[test]
    fn quadratic_coefficient_three_sites() {
        let r = unit_ring(3);
        assert!((quadratic_coefficient(&r) - 0.375).abs() < 1e-15);
        let l = 1e-3;
        let f = optimize_scgf(&r, l, 0.0).unwrap().f;
        assert!((f / (l * l) - 0.375).abs() / 0.375 < 1e-4);
    }

    #[test]
    fn optimum_value_matches_functional() {
        let r = RingParams::new(7, 1.2, 0.8, 1.1, 0.7).unwrap();
        let (l, tau) = (0.03, 0.05);
        let opt = optimize_scgf(&r, l, tau).unwrap();
        let rep = functional_f(&opt.spec, l, tau).unwrap();
        assert!((rep.f - opt.f).abs() < 1e-14);
    }

    #[test]
    fn finite_size_gallavotti_cohen() {
        let r = unit_ring(5);
        let tau = 0.05;
        for l in [-0.08, -0.03, 0.0, 0.02, 0.05] {
            let a = optimize_scgf(&r, l, tau).unwrap().f;
            let b = optimize_scgf(&r, -l - tau, tau).unwrap().f;
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-15), "{l}: {a} vs {b}");
        }
    }

    #[test]
    fn convex_in_lambda() {
        let r = unit_ring(7);
        let grid: Vec<f64> = (0..21).map(|i| -0.1 + 0.01 * i as f64).collect();
        let f: Vec<f64> = grid.iter().map(|l| optimize_scgf(&r, *l, 0.02).unwrap().f).collect();
        for i in 1..f.len() - 1 {
            assert!(f[i] <= 0.5 * (f[i - 1] + f[i + 1]) + 1e-15);
        }
    }

    #[test]
    fn small_lambda_coefficients_have_expected_order() {
        let r = unit_ring(5);
        let errs = |l: f64| {
            let opt = optimize_scgf(&r, l, 0.0).unwrap();
            let k = 1;
            let approx = optimal_mode_coeffs_small_lambda(&r, l, k).unwrap();
            let m = opt.spec.modes[k];
            ((m.a - approx.a).abs(), (m.b - approx.b).abs().max((m.c - approx.c).abs()))
        };
        let (a1, bc1) = errs(1e-3);
        let (a2, bc2) = errs(2e-3);
        let (a4, bc4) = errs(4e-3);
        let order = |e1: f64, e2: f64| (e2 / e1).log2();
        assert!((order(a1, a2) - 3.0).abs() < 0.2 && (order(a2, a4) - 3.0).abs() < 0.2, "{a1} {a2} {a4}");
        assert!((order(bc1, bc2) - 4.0).abs() < 0.3 && (order(bc2, bc4) - 4.0).abs() < 0.3, "{bc1} {bc2} {bc4}");
    }

    #[test]
    fn far_tilt_leaves_basin() {
        let err = optimize_scgf(&unit_ring(3), 5.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::OutOfBasin { .. }), "{err}");
    }
}
