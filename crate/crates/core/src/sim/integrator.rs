use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{Scheme, SimSpec};
use crate::chain::{conservative_and_drive_force, mean_current_unchecked, sigma_unchecked, ChainConfig, ReferenceMeasureSpec, State};
use crate::error::{Error, Result};

const BATCHES: usize = 32;
const BLOW_UP: f64 = 1e12;
const COV_SPACING: f64 = 0.01;

#[derive(Clone, Debug, Serialize)]
pub struct ReplicaStats {
    pub replica: usize,
    /// `int_0^t J ds` over the sampling window.
    pub integrated_current: f64,
    pub time_avg_current: f64,
    /// Time averages of `p_i^2`.
    pub kinetic_temps: Vec<f64>,
    /// `int_0^t sigma ds` with `beta_i = 1/T_i`.
    pub integrated_sigma: f64,
    pub covariance: Vec<Vec<f64>>,
    #[serde(skip)]
    pub batch_currents: Vec<f64>,
    #[serde(skip)]
    pub batch_kinetic: Vec<Vec<f64>>,
    #[serde(skip)]
    pub final_state: State,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryStats {
    pub t_sample: f64,
    pub time_avg_current: f64,
    pub time_avg_current_stderr: f64,
    pub kinetic_temps: Vec<f64>,
    pub kinetic_temps_stderr: Vec<f64>,
    /// Replica average of the `2N x 2N` covariance of `(q, p)`.
    pub covariance_est: Vec<Vec<f64>>,
    /// Replica average of `int sigma`.
    pub integrated_sigma: f64,
    pub replicas: Vec<ReplicaStats>,
}

/// Pairwise summation, so the merged value does not depend on a running order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

fn replica_rngs(seed: u64, replica: usize, n: usize) -> Vec<ChaCha8Rng> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(replica as u64).to_le_bytes());
    key[16..].copy_from_slice(b"ldchain-langevin");
    (0..n)
        .map(|site| {
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(site as u64);
            rng
        })
        .collect()
}

struct Stepper<'a> {
    cfg: &'a ChainConfig,
    scheme: Scheme,
    dt: f64,
    q: Vec<f64>,
    p: Vec<f64>,
    force: Vec<f64>,
    rngs: Vec<ChaCha8Rng>,
    ou_decay: Vec<f64>,
    ou_amp: Vec<f64>,
    em_amp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a ChainConfig, sim: &SimSpec, init: &State, replica: usize) -> Self {
        let n = cfg.n();
        let dt = sim.dt;
        let (g, t) = (cfg.gamma(), cfg.temperature());
        let ou_decay: Vec<f64> = g.iter().map(|g| (-g * dt).exp()).collect();
        let ou_amp = (0..n).map(|i| (t[i] * -(-2.0 * g[i] * dt).exp_m1()).sqrt()).collect();
        let em_amp = (0..n).map(|i| (2.0 * g[i] * t[i] * dt).sqrt()).collect();
        let mut force = vec![0.0; n];
        conservative_and_drive_force(cfg, &init.q, &mut force);
        Stepper {
            cfg,
            scheme: sim.scheme,
            dt,
            q: init.q.clone(),
            p: init.p.clone(),
            force,
            rngs: replica_rngs(sim.seed, replica, n),
            ou_decay,
            ou_amp,
            em_amp,
        }
    }

    fn step(&mut self) {
        let dt = self.dt;
        let n = self.q.len();
        match self.scheme {
            Scheme::SplittingBAOA => {
                for i in 0..n {
                    self.p[i] += 0.5 * dt * self.force[i];
                    self.q[i] += 0.5 * dt * self.p[i];
                }
                for i in 0..n {
                    let xi: f64 = self.rngs[i].sample(StandardNormal);
                    self.p[i] = self.ou_decay[i] * self.p[i] + self.ou_amp[i] * xi;
                    self.q[i] += 0.5 * dt * self.p[i];
                }
                conservative_and_drive_force(self.cfg, &self.q, &mut self.force);
                for i in 0..n {
                    self.p[i] += 0.5 * dt * self.force[i];
                }
            }
            Scheme::EulerMaruyama => {
                let gamma = self.cfg.gamma();
                for i in 0..n {
                    let xi: f64 = self.rngs[i].sample(StandardNormal);
                    self.q[i] += dt * self.p[i];
                    self.p[i] += dt * (self.force[i] - gamma[i] * self.p[i]) + self.em_amp[i] * xi;
                }
                conservative_and_drive_force(self.cfg, &self.q, &mut self.force);
            }
        }
    }

    fn blown_up(&self) -> bool {
        self.q.iter().chain(&self.p).any(|x| !(x.abs() <= BLOW_UP))
    }
}

/// Runs one replica: burn-in, then accumulation over the sampling window.
pub fn integrate_replica(cfg: &ChainConfig, sim: &SimSpec, init: &State, replica: usize) -> Result<ReplicaStats> {
    let n = cfg.n();
    if init.n() != n {
        return Err(Error::Dimension { expected: n, got: init.n() });
    }
    let beta = ReferenceMeasureSpec::from_config(cfg).beta;
    let mut st = Stepper::new(cfg, sim, init, replica);
    let burn = sim.burn_steps(cfg);
    let steps = sim.sample_steps();
    for k in 0..burn {
        st.step();
        if st.blown_up() {
            return Err(Error::BlowUp { step: k + 1, replica });
        }
    }

    let dt = sim.dt;
    let stride = ((COV_SPACING / dt).round() as u64).max(1);
    let dim = 2 * n;
    let mut x_sum = vec![0.0; dim];
    let mut xx_sum = vec![0.0; dim * dim];
    let mut cov_count = 0u64;
    let mut x = vec![0.0; dim];

    let mut batch_currents = vec![0.0; BATCHES];
    let mut batch_kinetic = vec![vec![0.0; n]; BATCHES];
    let mut batch_len = vec![0u64; BATCHES];
    let mut j_prev = mean_current_unchecked(cfg, &st.q, &st.p);
    let mut s_prev = sigma_unchecked(cfg, &beta, &st.q, &st.p);
    let (mut int_j, mut int_s) = (0.0, 0.0);

    for k in 0..steps {
        st.step();
        if st.blown_up() {
            return Err(Error::BlowUp { step: burn + k + 1, replica });
        }
        let b = (k as usize * BATCHES) / steps as usize;
        let j = mean_current_unchecked(cfg, &st.q, &st.p);
        let s = sigma_unchecked(cfg, &beta, &st.q, &st.p);
        let dj = 0.5 * dt * (j_prev + j);
        int_j += dj;
        int_s += 0.5 * dt * (s_prev + s);
        batch_currents[b] += dj;
        for (acc, p) in batch_kinetic[b].iter_mut().zip(&st.p) {
            *acc += p * p;
        }
        batch_len[b] += 1;
        (j_prev, s_prev) = (j, s);

        if (k + 1) % stride == 0 {
            x[..n].copy_from_slice(&st.q);
            x[n..].copy_from_slice(&st.p);
            for a in 0..dim {
                x_sum[a] += x[a];
                for c in a..dim {
                    xx_sum[a * dim + c] += x[a] * x[c];
                }
            }
            cov_count += 1;
        }
    }

    let used: Vec<usize> = (0..BATCHES).filter(|&b| batch_len[b] > 0).collect();
    let batch_currents: Vec<f64> = used.iter().map(|&b| batch_currents[b] / (batch_len[b] as f64 * dt)).collect();
    let batch_kinetic: Vec<Vec<f64>> =
        used.iter().map(|&b| batch_kinetic[b].iter().map(|s| s / batch_len[b] as f64).collect()).collect();
    let kinetic_temps = (0..n)
        .map(|i| {
            let total: f64 = used.iter().zip(&batch_kinetic).map(|(&b, bk)| bk[i] * batch_len[b] as f64).sum();
            total / steps as f64
        })
        .collect();

    let m = cov_count.max(1) as f64;
    let mut covariance = vec![vec![0.0; dim]; dim];
    for a in 0..dim {
        for c in a..dim {
            let v = xx_sum[a * dim + c] / m - (x_sum[a] / m) * (x_sum[c] / m);
            covariance[a][c] = v;
            covariance[c][a] = v;
        }
    }

    Ok(ReplicaStats {
        replica,
        integrated_current: int_j,
        time_avg_current: int_j / (steps as f64 * dt),
        kinetic_temps,
        integrated_sigma: int_s,
        covariance,
        batch_currents,
        batch_kinetic,
        final_state: State { q: st.q, p: st.p },
    })
}

/// Integrates `sim.n_replicas` independent replicas from `init` and merges
/// their statistics. Standard errors come from batch means pooled over
/// replicas.
pub fn integrate(cfg: &ChainConfig, sim: &SimSpec, init: &State) -> Result<TrajectoryStats> {
    sim.validate(cfg)?;
    let replicas: Vec<ReplicaStats> =
        (0..sim.n_replicas).into_par_iter().map(|r| integrate_replica(cfg, sim, init, r)).collect::<Result<_>>()?;
    Ok(merge(cfg.n(), sim.sample_steps() as f64 * sim.dt, replicas))
}

fn merge(n: usize, t_sample: f64, replicas: Vec<ReplicaStats>) -> TrajectoryStats {
    let r = replicas.len() as f64;
    let batches: Vec<f64> = replicas.iter().flat_map(|s| s.batch_currents.iter().copied()).collect();
    let (_, time_avg_current_stderr) = mean_and_stderr(&batches);
    let currents: Vec<f64> = replicas.iter().map(|s| s.time_avg_current).collect();
    let mut kinetic_temps = Vec::with_capacity(n);
    let mut kinetic_temps_stderr = Vec::with_capacity(n);
    for i in 0..n {
        let per_replica: Vec<f64> = replicas.iter().map(|s| s.kinetic_temps[i]).collect();
        kinetic_temps.push(pairwise_sum(&per_replica) / r);
        let per_batch: Vec<f64> = replicas.iter().flat_map(|s| s.batch_kinetic.iter().map(move |b| b[i])).collect();
        kinetic_temps_stderr.push(mean_and_stderr(&per_batch).1);
    }
    let dim = 2 * n;
    let covariance_est = (0..dim)
        .map(|a| {
            (0..dim)
                .map(|c| pairwise_sum(&replicas.iter().map(|s| s.covariance[a][c]).collect::<Vec<_>>()) / r)
                .collect()
        })
        .collect();
    let sigmas: Vec<f64> = replicas.iter().map(|s| s.integrated_sigma).collect();
    TrajectoryStats {
        t_sample,
        time_avg_current: pairwise_sum(&currents) / r,
        time_avg_current_stderr,
        kinetic_temps,
        kinetic_temps_stderr,
        covariance_est,
        integrated_sigma: pairwise_sum(&sigmas) / r,
        replicas,
    }
}
