//! Command-line experiment runner.
//!
//! Settings come from an optional `--config` JSON document
//! ([`ExperimentConfig`]); command-line flags override the corresponding
//! config fields. Exit codes: 0 success, 1 invalid input, 2 numerical failure.
//! `LDCHAIN_THREADS` caps the worker pool.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chain::{Boundary, ChainConfig};
use crate::error::{Error, Result};
use crate::sim::{Scheme, SimSpec};

pub use commands::{prop4_check, Prop4Report, Prop4Row};
pub use config::{
    ExperimentConfig, Format, GcTask, GdbTask, KappaTask, LyapunovTask, OutputSpec, Prop4Task, RateSourceKind, RateTask,
    ScgfTask,
};

#[derive(Parser, Debug)]
#[command(name = "ldchain", version, about = "Current large deviations of thermostated oscillator chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the Langevin dynamics and report time averages.
    Simulate(SimArgs),
    /// SCGF curve from the Gaussian variational calculus.
    ScgfGaussian(ScgfArgs),
    /// SCGF curve from the tilted-generator Riccati equation.
    ScgfRiccati(ScgfArgs),
    /// SCGF curve from replica exponential averages.
    ScgfEmpirical(EmpiricalArgs),
    /// Rate function of the current by Legendre transform.
    Rate(RateArgs),
    /// Heat conductivity of the harmonic ring.
    Kappa(KappaArgs),
    /// Finite-time fluctuation-relation histogram check.
    GcCheck(GcArgs),
    /// Exact generalized detailed balance check on polynomial test functions.
    GdbCheck(GdbArgs),
    /// Sign of the mean current against the drive.
    Positivity(SimArgs),
    /// Fit and verify the Lyapunov bound on random states.
    LyapunovScan(LyapunovArgs),
    /// Large-N scaling of the SCGF against the conductivity limit.
    Prop4Check(Prop4Args),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; without it data goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundaryArg {
    Periodic,
    Open,
}

#[derive(Args, Debug, Default)]
struct ChainArgs {
    /// Number of sites.
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    #[arg(long, allow_hyphen_values = true)]
    omega0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    EulerMaruyama,
    Splitting,
}

#[derive(Args, Debug)]
struct SimFlags {
    /// Master seed; required for reproducibility.
    #[arg(long, required = true)]
    seed: u64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_sample: Option<f64>,
    #[arg(long)]
    t_burn: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    sim: SimFlags,
}

#[derive(Args, Debug)]
struct ScgfArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    /// Comma-separated, increasing lambda values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct EmpiricalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    sim: SimFlags,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, value_enum)]
    source: Option<RateSourceKind>,
    /// Comma-separated, increasing values of `j = N x` for the time-averaged current `x`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    j: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KappaMethodArg {
    Quadrature,
    ClosedForm,
    DiscreteSum,
}

#[derive(Args, Debug)]
struct KappaArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<KappaMethodArg>,
    /// Lattice size for `discrete-sum`.
    #[arg(long = "n")]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct GcArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    sim: SimFlags,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args, Debug)]
struct GdbArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long)]
    max_degree: Option<u32>,
}

#[derive(Args, Debug)]
struct LyapunovArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long, required = true)]
    seed: u64,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    checks: Option<usize>,
}

#[derive(Args, Debug)]
struct Prop4Args {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    chain: ChainArgs,
    #[arg(long = "n-list", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau_prime: Option<f64>,
}

impl CommonArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let mut out = cfg.output.take().unwrap_or_default();
        if let Some(p) = &self.output {
            out.path = Some(p.clone());
        }
        if let Some(f) = self.format {
            out.format = f;
        }
        cfg.output = Some(out);
        Ok(cfg)
    }
}

impl ChainArgs {
    fn shape_overridden(&self) -> bool {
        self.n.is_some()
            || self.boundary.is_some()
            || self.omega0.is_some()
            || self.omega.is_some()
            || self.gamma.is_some()
            || self.temperature.is_some()
    }

    /// Chain from the config with flag overrides. Overriding the shape needs a
    /// uniform harmonic base chain (or none, in which case `--n` is required).
    fn resolve(&self, base: Option<ChainConfig>) -> Result<ChainConfig> {
        let mut chain = match base {
            Some(c) if !self.shape_overridden() => c,
            base => {
                let (mut n, mut boundary, mut w0, mut w, mut g, mut t, mut tau) = (None, Boundary::Periodic, 1.0, 1.0, 1.0, 1.0, 0.0);
                if let Some(c) = &base {
                    let (Some((bw0, bw)), Some(bg), Some(bt)) =
                        (c.potential().harmonic_params(), c.uniform_gamma(), c.uniform_temperature())
                    else {
                        return Err(Error::Config("shape flags can only override a uniform harmonic chain".into()));
                    };
                    if c.theta().iter().any(|x| *x != 0.0) {
                        return Err(Error::Config("shape flags cannot override a chain with a theta profile".into()));
                    }
                    (n, boundary, w0, w, g, t, tau) = (Some(c.n()), c.boundary(), bw0, bw, bg, bt, c.tau());
                }
                let n = self.n.or(n).ok_or_else(|| Error::Config("no chain: pass --n or a config with a chain block".into()))?;
                if let Some(b) = self.boundary {
                    boundary = match b {
                        BoundaryArg::Periodic => Boundary::Periodic,
                        BoundaryArg::Open => Boundary::Open,
                    };
                }
                ChainConfig::harmonic_uniform(
                    n,
                    boundary,
                    self.omega0.unwrap_or(w0),
                    self.omega.unwrap_or(w),
                    self.gamma.unwrap_or(g),
                    self.temperature.unwrap_or(t),
                    tau,
                )?
            }
        };
        if let Some(tau) = self.tau {
            chain = ChainConfig::new(
                chain.n(),
                chain.boundary(),
                chain.potential().clone(),
                chain.gamma().to_vec(),
                chain.temperature().to_vec(),
                chain.theta().to_vec(),
                tau,
            )?;
        }
        Ok(chain)
    }
}

impl SimFlags {
    fn resolve(&self, base: Option<SimSpec>) -> Result<SimSpec> {
        let mut sim = match base {
            Some(s) => s,
            None => SimSpec::new(
                self.dt.ok_or_else(|| Error::Config("no simulation settings: pass --dt or a config with a sim block".into()))?,
                self.t_sample
                    .ok_or_else(|| Error::Config("no simulation settings: pass --t-sample or a config with a sim block".into()))?,
                self.seed,
                1,
            ),
        };
        sim.seed = self.seed;
        if let Some(v) = self.dt {
            sim.dt = v;
        }
        if let Some(v) = self.t_sample {
            sim.t_sample = v;
        }
        if let Some(v) = self.t_burn {
            sim.t_burn = Some(v);
        }
        if let Some(v) = self.replicas {
            sim.n_replicas = v;
        }
        if let Some(s) = self.scheme {
            sim.scheme = match s {
                SchemeArg::EulerMaruyama => Scheme::EulerMaruyama,
                SchemeArg::Splitting => Scheme::SplittingBAOA,
            };
        }
        Ok(sim)
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("LDCHAIN_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("LDCHAIN_THREADS must be a positive integer, got {v:?}")))?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = configure_threads().and_then(|_| commands::dispatch(cli.command));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
