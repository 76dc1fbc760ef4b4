use serde::{Deserialize, Serialize};

use super::potential::PotentialSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    /// Fixed walls: `q_0 = q_{N+1} = 0`.
    Open,
}

/// Geometry, potentials, thermostat profile and drive of an oscillator chain.
///
/// Construct through [`ChainConfig::new`] (or deserialization), both of which
/// validate the invariants.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawChainConfig")]
pub struct ChainConfig {
    #[serde(rename = "N")]
    n: usize,
    boundary: Boundary,
    potential: PotentialSpec,
    gamma: Vec<f64>,
    temperature: Vec<f64>,
    theta: Vec<f64>,
    tau: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChainConfig {
    #[serde(rename = "N")]
    n: usize,
    boundary: Boundary,
    potential: PotentialSpec,
    gamma: Vec<f64>,
    temperature: Vec<f64>,
    theta: Vec<f64>,
    tau: f64,
}

impl TryFrom<RawChainConfig> for ChainConfig {
    type Error = Error;
    fn try_from(r: RawChainConfig) -> Result<Self> {
        ChainConfig::new(r.n, r.boundary, r.potential, r.gamma, r.temperature, r.theta, r.tau)
    }
}

impl ChainConfig {
    pub fn new(
        n: usize,
        boundary: Boundary,
        potential: PotentialSpec,
        gamma: Vec<f64>,
        temperature: Vec<f64>,
        theta: Vec<f64>,
        tau: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        for (name, v) in [("gamma", &gamma), ("temperature", &temperature), ("theta", &theta)] {
            if v.len() != n {
                return Err(Error::Config(format!("{name} has length {}, expected N = {n}", v.len())));
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::Config(format!("{name} contains non-finite value {x}")));
            }
        }
        if let Some((i, g)) = gamma.iter().enumerate().find(|(_, g)| **g < 0.0) {
            return Err(Error::Config(format!("gamma[{i}] = {g} is negative")));
        }
        if let Some((i, t)) = temperature.iter().enumerate().find(|(_, t)| **t <= 0.0) {
            return Err(Error::Config(format!("temperature[{i}] = {t} is not positive")));
        }
        if !tau.is_finite() {
            return Err(Error::Config(format!("tau = {tau} is not finite")));
        }
        if tau != 0.0 && theta.iter().any(|t| *t != 0.0) {
            return Err(Error::Config("tau and theta are alternative drives; set only one".into()));
        }
        potential.validate()?;
        Ok(ChainConfig { n, boundary, potential, gamma, temperature, theta, tau })
    }

    /// Uniform harmonic chain with every site thermostated at the same
    /// temperature and friction.
    pub fn harmonic_uniform(
        n: usize,
        boundary: Boundary,
        omega0: f64,
        omega: f64,
        gamma: f64,
        temperature: f64,
        tau: f64,
    ) -> Result<Self> {
        ChainConfig::new(
            n,
            boundary,
            PotentialSpec::harmonic(omega0, omega),
            vec![gamma; n],
            vec![temperature; n],
            vec![0.0; n],
            tau,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
    pub fn temperature(&self) -> &[f64] {
        &self.temperature
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Number of bonds carrying a current: `N` for Periodic, `N - 1` for Open.
    pub fn n_bonds(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.n,
            Boundary::Open => self.n - 1,
        }
    }

    /// Effective drive coefficient on the bond `(i, i+1)`. A uniform `tau`
    /// maps to `tau / T_i^2`; Open chains carry no drive on the wall bonds.
    pub fn bond_theta(&self, i: usize) -> f64 {
        if self.boundary == Boundary::Open && i + 1 >= self.n {
            return 0.0;
        }
        if self.tau != 0.0 {
            let t = self.temperature[i];
            self.tau / (t * t)
        } else {
            self.theta[i]
        }
    }

    pub fn is_driven(&self) -> bool {
        self.tau != 0.0 || self.theta.iter().any(|t| *t != 0.0)
    }

    /// `Some(T)` when all temperatures coincide.
    pub fn uniform_temperature(&self) -> Option<f64> {
        let t0 = self.temperature[0];
        self.temperature.iter().all(|t| *t == t0).then_some(t0)
    }

    /// `Some(gamma)` when all frictions coincide.
    pub fn uniform_gamma(&self) -> Option<f64> {
        let g0 = self.gamma[0];
        self.gamma.iter().all(|g| *g == g0).then_some(g0)
    }

    /// Uniform harmonic periodic chain parameters `(T, omega0, omega, gamma)`.
    pub fn uniform_harmonic_periodic(&self) -> Option<(f64, f64, f64, f64)> {
        if self.boundary != Boundary::Periodic {
            return None;
        }
        let (omega0, omega) = self.potential.harmonic_params()?;
        Some((self.uniform_temperature()?, omega0, omega, self.uniform_gamma()?))
    }

    /// Advisory check of the admissibility condition on the Lyapunov
    /// parameter `b`: `inf_i min(delta/(gamma_i T+ + T+^2), gamma_i/(8 T+)) > b`.
    pub fn lyapunov_b_bound(&self) -> f64 {
        let t_max = self.temperature.iter().cloned().fold(f64::MIN, f64::max);
        let delta = self.potential.delta;
        self.gamma
            .iter()
            .map(|g| (delta / (g * t_max + t_max * t_max)).min(g / (8.0 * t_max)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Phase-space point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        State { q: vec![0.0; n], p: vec![0.0; n] }
    }

    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Dimension { expected: q.len(), got: p.len() });
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::Precondition("state has non-finite entries".into()));
        }
        Ok(State { q, p })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    /// `(q_1..q_N, p_1..p_N)`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn from_slice(x: &[f64]) -> Self {
        let n = x.len() / 2;
        State { q: x[..n].to_vec(), p: x[n..].to_vec() }
    }
}

/// Inverse temperatures of the reference product measure `rho_beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceMeasureSpec {
    pub beta: Vec<f64>,
}

impl ReferenceMeasureSpec {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some((i, b)) = beta.iter().enumerate().find(|(_, b)| !(**b > 0.0) || !b.is_finite()) {
            return Err(Error::Config(format!("beta[{i}] = {b} is not positive")));
        }
        Ok(ReferenceMeasureSpec { beta })
    }

    /// `beta_i = 1 / T_i`.
    pub fn from_config(cfg: &ChainConfig) -> Self {
        ReferenceMeasureSpec { beta: cfg.temperature().iter().map(|t| 1.0 / t).collect() }
    }

    /// Fails at the first thermostated site whose `beta` differs from `1/T`.
    pub fn check_matches(&self, cfg: &ChainConfig) -> Result<()> {
        if self.beta.len() != cfg.n() {
            return Err(Error::Dimension { expected: cfg.n(), got: self.beta.len() });
        }
        for i in 0..cfg.n() {
            let inv_t = 1.0 / cfg.temperature()[i];
            if cfg.gamma()[i] > 0.0 && (self.beta[i] - inv_t).abs() > 1e-12 * inv_t {
                return Err(Error::ReferenceMismatch { site: i, beta: self.beta[i], inv_t });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_unknown_fields() {
        let cfg = ChainConfig::harmonic_uniform(3, Boundary::Periodic, 1.0, 1.0, 1.0, 1.0, 0.1).unwrap();
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"N\":3"));
        let back: ChainConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.n(), 3);
        assert_eq!(back.tau(), 0.1);

        let mut v: serde_json::Value = serde_json::from_str(&s).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ChainConfig>(v).is_err());
    }

    #[test]
    fn rejects_invalid() {
        let p = PotentialSpec::harmonic(1.0, 1.0);
        assert!(ChainConfig::new(0, Boundary::Open, p.clone(), vec![], vec![], vec![], 0.0).is_err());
        assert!(ChainConfig::new(2, Boundary::Open, p.clone(), vec![1.0; 2], vec![1.0, 0.0], vec![0.0; 2], 0.0).is_err());
        assert!(ChainConfig::new(2, Boundary::Open, p.clone(), vec![-1.0, 1.0], vec![1.0; 2], vec![0.0; 2], 0.0).is_err());
        assert!(ChainConfig::new(2, Boundary::Periodic, p, vec![1.0; 2], vec![1.0; 2], vec![0.1, 0.0], 0.1).is_err());
    }

    #[test]
    fn invalid_json_is_rejected_by_validation() {
        let doc = r#"{"N":2,"boundary":"Open","potential":{"kind":{"Harmonic":{"omega0":1.0,"omega":1.0}},"delta":0.5},
            "gamma":[1.0,1.0],"temperature":[1.0,-1.0],"theta":[0.0,0.0],"tau":0.0}"#;
        let err = serde_json::from_str::<ChainConfig>(doc).unwrap_err();
        assert!(err.to_string().contains("temperature"));
    }

    #[test]
    fn open_boundary_has_no_wall_drive() {
        let p = PotentialSpec::harmonic(1.0, 1.0);
        let cfg = ChainConfig::new(3, Boundary::Open, p, vec![1.0; 3], vec![1.0; 3], vec![0.3, 0.2, 0.7], 0.0).unwrap();
        assert_eq!(cfg.bond_theta(2), 0.0);
        assert_eq!(cfg.bond_theta(1), 0.2);
    }

    #[test]
    fn uniform_tau_maps_to_theta() {
        let cfg = ChainConfig::harmonic_uniform(4, Boundary::Periodic, 1.0, 1.0, 1.0, 2.0, 0.4).unwrap();
        assert!((cfg.bond_theta(0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn reference_mismatch_names_site() {
        let p = PotentialSpec::harmonic(1.0, 1.0);
        let cfg = ChainConfig::new(2, Boundary::Open, p, vec![1.0, 1.0], vec![1.0, 2.0], vec![0.0; 2], 0.0).unwrap();
        let r = ReferenceMeasureSpec::new(vec![1.0, 1.0]).unwrap();
        match r.check_matches(&cfg) {
            Err(Error::ReferenceMismatch { site, .. }) => assert_eq!(site, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
