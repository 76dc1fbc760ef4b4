use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar function handle used by custom potentials.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied pinning potential `V` and nearest-neighbour potential `U`,
/// together with their first and second derivatives.
#[derive(Clone)]
pub struct CustomPotential {
    pub v: ScalarFn,
    pub u: ScalarFn,
    pub dv: ScalarFn,
    pub du: ScalarFn,
    pub d2v: ScalarFn,
    pub d2u: ScalarFn,
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomPotential { .. }")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum PotentialKind {
    /// `V(q) = omega0^2 q^2 / 2`, `U(r) = omega^2 r^2 / 2`.
    Harmonic { omega0: f64, omega: f64 },
    /// Only constructible through [`PotentialSpec::custom`]; not serializable.
    #[serde(skip)]
    Custom(CustomPotential),
}

/// Potential energy specification: the two potentials plus the convexity
/// constant `delta` used by the large-deviation validity conditions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub delta: f64,
}

const PROBE_POINTS: usize = 32;
const PROBE_HALF_WIDTH: f64 = 2.0;
const PROBE_REL_TOL: f64 = 1e-5;

fn probe_grid() -> impl Iterator<Item = f64> {
    (0..PROBE_POINTS).map(|k| {
        -PROBE_HALF_WIDTH + 2.0 * PROBE_HALF_WIDTH * (k as f64 + 0.5) / PROBE_POINTS as f64
    })
}

fn check_derivative(name: &str, f: &ScalarFn, df: &ScalarFn) -> Result<()> {
    for x in probe_grid() {
        let h = 1e-4 * x.abs().max(1.0);
        let numeric = (f(x + h) - f(x - h)) / (2.0 * h);
        let analytic = df(x);
        if !analytic.is_finite() || (numeric - analytic).abs() > PROBE_REL_TOL * analytic.abs().max(1.0) {
            return Err(Error::Config(format!(
                "{name} inconsistent with its derivative at x = {x}: central difference {numeric}, supplied {analytic}"
            )));
        }
    }
    Ok(())
}

impl PotentialSpec {
    pub fn harmonic(omega0: f64, omega: f64) -> Self {
        PotentialSpec {
            kind: PotentialKind::Harmonic { omega0, omega },
            delta: harmonic_delta(omega0, omega),
        }
    }

    /// Builds a custom potential after probing the supplied derivatives
    /// against central differences on a 32-point grid.
    pub fn custom(potential: CustomPotential, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {delta}")));
        }
        check_derivative("V'", &potential.v, &potential.dv)?;
        check_derivative("U'", &potential.u, &potential.du)?;
        check_derivative("V''", &potential.dv, &potential.d2v)?;
        check_derivative("U''", &potential.du, &potential.d2u)?;
        Ok(PotentialSpec {
            kind: PotentialKind::Custom(potential),
            delta,
        })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        // an unpinned harmonic chain has delta = 0; it is flagged, not rejected
        let floor_ok = if self.is_harmonic() { self.delta >= 0.0 } else { self.delta > 0.0 };
        if !floor_ok || !self.delta.is_finite() {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if let PotentialKind::Harmonic { omega0, omega } = self.kind {
            if !(omega0 >= 0.0) || !omega0.is_finite() {
                return Err(Error::Config(format!("omega0 must be non-negative, got {omega0}")));
            }
            if !(omega > 0.0) || !omega.is_finite() {
                return Err(Error::Config(format!("omega must be positive, got {omega}")));
            }
        }
        Ok(())
    }

    /// `(omega0, omega)` for harmonic potentials.
    pub fn harmonic_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            PotentialKind::Harmonic { omega0, omega } => Some((omega0, omega)),
            PotentialKind::Custom(_) => None,
        }
    }

    pub fn is_harmonic(&self) -> bool {
        self.harmonic_params().is_some()
    }

    #[inline]
    pub fn v(&self, q: f64) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { omega0, .. } => 0.5 * omega0 * omega0 * q * q,
            PotentialKind::Custom(c) => (c.v)(q),
        }
    }

    #[inline]
    pub fn u(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { omega, .. } => 0.5 * omega * omega * r * r,
            PotentialKind::Custom(c) => (c.u)(r),
        }
    }

    #[inline]
    pub fn dv(&self, q: f64) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { omega0, .. } => omega0 * omega0 * q,
            PotentialKind::Custom(c) => (c.dv)(q),
        }
    }

    #[inline]
    pub fn du(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { omega, .. } => omega * omega * r,
            PotentialKind::Custom(c) => (c.du)(r),
        }
    }

    pub fn d2v(&self, q: f64) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { omega0, .. } => omega0 * omega0,
            PotentialKind::Custom(c) => (c.d2v)(q),
        }
    }

    pub fn d2u(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::Harmonic { omega, .. } => omega * omega,
            PotentialKind::Custom(c) => (c.d2u)(r),
        }
    }

    /// Probes convexity (`V'' >= delta`, `U'' >= 0`) on a grid and returns a
    /// human-readable flag per violation. Violations are advisory only.
    pub fn convexity_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.delta <= 0.0 {
            flags.push("delta = 0: the pinning potential is not uniformly convex".to_string());
        }
        for x in probe_grid() {
            let v2 = self.d2v(x);
            if self.delta > 0.0 && v2 < self.delta {
                flags.push(format!("V''({x:.3}) = {v2:.4e} < delta = {:.4e}", self.delta));
            }
            let u2 = self.d2u(x);
            if u2 < 0.0 {
                flags.push(format!("U''({x:.3}) = {u2:.4e} < 0 (U not convex)"));
            }
        }
        flags
    }
}

/// Largest `delta` for which a harmonic chain satisfies both convexity
/// conditions: `V'' = omega0^2 >= delta` and
/// `sum V + U >= delta * sum U'^2`, i.e. `delta <= 1 / (2 omega^2)`.
pub fn harmonic_delta(omega0: f64, omega: f64) -> f64 {
    let bond = if omega > 0.0 { 0.5 / (omega * omega) } else { f64::INFINITY };
    (omega0 * omega0).min(bond)
}
