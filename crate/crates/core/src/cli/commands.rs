use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{check_grid, ExperimentConfig, Format, OutputSpec, RateSourceKind};
use super::{ChainArgs, Command, CommonArgs, KappaMethodArg};
use crate::chain::{
    check_gdb, count_violations, fit_lyapunov_constants, sample_probe_states, ChainConfig, ReferenceMeasureSpec, State,
    TestFamily,
};
use crate::curve::{rate_function, CurveData, CurveDocument, CurveMethod, Provenance, RateSource, ScgfCurve, ScgfPoint};
use crate::error::{Error, Result};
use crate::gaussian::{conductivity_kappa, optimize_scgf, scaled_limit_f, KappaMethod, RingParams};
use crate::sim::{current_sign_test, empirical_scgf, gc_histogram_check, integrate, TrajectoryStats};
use crate::tilted::{linear_system_from_config, scgf_riccati};

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn write(&self, out: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

enum Payload {
    Curve(CurveData),
    Table(Table, serde_json::Value),
}

#[derive(Serialize)]
struct ResultDocument {
    provenance: Provenance,
    result: serde_json::Value,
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Writes data to the output target and prints the summary line: on stdout
/// when data went to a file, on stderr when data went to stdout.
fn emit(command: &str, cfg: &ExperimentConfig, payload: Payload, summary: &str) -> Result<()> {
    let out = cfg.output.clone().unwrap_or_default();
    let mut inputs_cfg = cfg.clone();
    inputs_cfg.output = None;
    let provenance = Provenance::new(&serde_json::json!({ "command": command, "config": inputs_cfg }))?;
    let write_csv = |w: &mut dyn Write| -> Result<()> {
        match &payload {
            Payload::Curve(CurveData::Scgf(c)) => c.write_csv(w),
            Payload::Curve(CurveData::Rate(c)) => c.write_csv(w),
            Payload::Table(t, _) => t.write(w),
        }
    };
    let doc = match &payload {
        Payload::Curve(c) => serde_json::to_value(CurveDocument { provenance, curve: c.clone() })?,
        Payload::Table(_, v) => serde_json::to_value(ResultDocument { provenance, result: v.clone() })?,
    };
    let OutputSpec { path, format } = out;
    match path {
        Some(path) => {
            match format {
                Format::Csv => {
                    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
                    write_csv(&mut f)?;
                    f.flush()?;
                    write_json(&path.with_extension("json"), &doc)?;
                }
                Format::Json => write_json(&path, &doc)?,
            }
            println!("{summary}");
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            match format {
                Format::Csv => write_csv(&mut lock)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut lock, &doc)?;
                    writeln!(lock)?;
                }
            }
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn write_json(path: &std::path::Path, doc: &serde_json::Value) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, doc)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn lambda_grid(cfg: &mut ExperimentConfig, flag: Option<Vec<f64>>) -> Result<Vec<f64>> {
    if let Some(g) = flag {
        check_grid("--lambda", &g)?;
        cfg.scgf = Some(super::config::ScgfTask { lambda_grid: g });
    }
    cfg.scgf
        .as_ref()
        .map(|t| t.lambda_grid.clone())
        .ok_or_else(|| Error::Config("no lambda grid: pass --lambda or a config with an scgf block".into()))
}

fn chain(cfg: &mut ExperimentConfig, args: &ChainArgs) -> Result<ChainConfig> {
    let c = args.resolve(cfg.chain.take())?;
    cfg.chain = Some(c.clone());
    Ok(c)
}

fn load(common: &CommonArgs) -> Result<ExperimentConfig> {
    common.load()
}

fn scgf_curve(method: CurveMethod, chain: &ChainConfig, grid: &[f64]) -> Result<ScgfCurve> {
    let points: Vec<ScgfPoint> = match method {
        CurveMethod::Gaussian => {
            let ring = RingParams::from_config(chain)?;
            grid.par_iter()
                .map(|&l| optimize_scgf(&ring, l, chain.tau()).map(|o| ScgfPoint::exact(l, o.f)))
                .collect::<Result<_>>()?
        }
        CurveMethod::Riccati => {
            let sys = linear_system_from_config(chain)?;
            grid.par_iter().map(|&l| scgf_riccati(&sys, l).map(|f| ScgfPoint::exact(l, f))).collect::<Result<_>>()?
        }
        _ => unreachable!("deterministic curve methods only"),
    };
    Ok(ScgfCurve { method, n: chain.n(), tau: chain.tau(), points })
}

fn curve_summary(command: &str, c: &ScgfCurve) -> String {
    let (lo, hi) = c.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    format!("{command}: {} points, N = {}, tau = {}, F in [{lo:.6e}, {hi:.6e}]", c.points.len(), c.n, c.tau)
}

fn trajectory_table(stats: &TrajectoryStats) -> Table {
    let rows = (0..stats.kinetic_temps.len())
        .map(|i| {
            vec![
                i.to_string(),
                num(stats.kinetic_temps[i]),
                num(stats.kinetic_temps_stderr[i]),
                num(stats.time_avg_current),
                num(stats.time_avg_current_stderr),
                num(stats.integrated_sigma),
            ]
        })
        .collect();
    Table {
        header: vec!["site", "kinetic_temp", "kinetic_temp_stderr", "time_avg_current", "time_avg_current_stderr", "integrated_sigma"],
        rows,
    }
}

fn warn_all(warnings: Vec<String>) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

pub(super) fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => {
            let mut cfg = load(&a.common)?;
            let chain = chain(&mut cfg, &a.chain)?;
            let sim = a.sim.resolve(cfg.sim.take())?;
            cfg.sim = Some(sim.clone());
            warn_all(sim.validate(&chain)?);
            let stats = integrate(&chain, &sim, &State::zeros(chain.n()))?;
            let summary = format!(
                "simulate: N = {}, {} replicas, <J> = {:.6e} +- {:.6e}",
                chain.n(),
                sim.n_replicas,
                stats.time_avg_current,
                stats.time_avg_current_stderr
            );
            let value = serde_json::to_value(&stats)?;
            emit("simulate", &cfg, Payload::Table(trajectory_table(&stats), value), &summary)
        }
        Command::ScgfGaussian(a) => scgf_command("scgf-gaussian", CurveMethod::Gaussian, a),
        Command::ScgfRiccati(a) => scgf_command("scgf-riccati", CurveMethod::Riccati, a),
        Command::ScgfEmpirical(a) => {
            let mut cfg = load(&a.common)?;
            let chain = chain(&mut cfg, &a.chain)?;
            let grid = lambda_grid(&mut cfg, a.lambda)?;
            let sim = a.sim.resolve(cfg.sim.take())?;
            cfg.sim = Some(sim.clone());
            warn_all(sim.validate(&chain)?);
            let curve = empirical_scgf(&chain, &sim, &grid)?;
            let flagged = curve.points.iter().filter(|p| p.low_ess).count();
            let summary = format!("{}, {flagged} low-ESS points", curve_summary("scgf-empirical", &curve));
            emit("scgf-empirical", &cfg, Payload::Curve(CurveData::Scgf(curve)), &summary)
        }
        Command::Rate(a) => {
            let mut cfg = load(&a.common)?;
            let chain = chain(&mut cfg, &a.chain)?;
            let mut task = cfg.rate.take();
            if let Some(j) = a.j {
                check_grid("--j", &j)?;
                let source = a.source.or(task.as_ref().map(|t| t.source)).unwrap_or(RateSourceKind::Limit);
                task = Some(super::config::RateTask { j_grid: j, source, lambda_grid: task.and_then(|t| t.lambda_grid) });
            }
            let mut task = task.ok_or_else(|| Error::Config("no j grid: pass --j or a config with a rate block".into()))?;
            if let Some(s) = a.source {
                task.source = s;
            }
            if let Some(l) = a.lambda {
                check_grid("--lambda", &l)?;
                task.lambda_grid = Some(l);
            }
            cfg.rate = Some(task.clone());
            let source = match task.source {
                RateSourceKind::Limit => {
                    let (t, w0, w, g) = chain
                        .uniform_harmonic_periodic()
                        .ok_or_else(|| Error::Precondition("the limit rate needs a uniform harmonic ring".into()))?;
                    let kappa = conductivity_kappa(w0, w, g, KappaMethod::ClosedForm)?;
                    RateSource::Limit { n: chain.n(), kappa, tau_prime: chain.n() as f64 * chain.tau(), temperature: t }
                }
                kind => {
                    let grid = task
                        .lambda_grid
                        .clone()
                        .ok_or_else(|| Error::Config("sampled rate sources need --lambda or rate.lambda_grid".into()))?;
                    let method = if kind == RateSourceKind::Gaussian { CurveMethod::Gaussian } else { CurveMethod::Riccati };
                    RateSource::Sampled(scgf_curve(method, &chain, &grid)?)
                }
            };
            let curve = rate_function(&source, &task.j_grid)?;
            if curve.convexified > 0 {
                eprintln!("warning: {} SCGF points dropped by convexification", curve.convexified);
            }
            let min = curve.points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
            let summary = format!("rate: {} points, N = {}, min I = {min:.6e}", curve.points.len(), curve.n);
            emit("rate", &cfg, Payload::Curve(CurveData::Rate(curve)), &summary)
        }
        Command::Kappa(a) => {
            let mut cfg = load(&a.common)?;
            let base = cfg.chain.as_ref().and_then(|c| c.uniform_harmonic_periodic());
            let (w0, w, g) = (
                a.omega0.or(base.map(|b| b.1)).unwrap_or(1.0),
                a.omega.or(base.map(|b| b.2)).unwrap_or(1.0),
                a.gamma.or(base.map(|b| b.3)).unwrap_or(1.0),
            );
            let method = match a.method {
                Some(KappaMethodArg::Quadrature) => KappaMethod::Quadrature,
                Some(KappaMethodArg::ClosedForm) => KappaMethod::ClosedForm,
                Some(KappaMethodArg::DiscreteSum) => KappaMethod::DiscreteSum(
                    a.n.or(cfg.chain.as_ref().map(|c| c.n()))
                        .ok_or_else(|| Error::Config("discrete-sum needs --n".into()))?,
                ),
                None => cfg.kappa.as_ref().map(|k| k.method).unwrap_or(KappaMethod::ClosedForm),
            };
            cfg.kappa = Some(super::config::KappaTask { method });
            let kappa = conductivity_kappa(w0, w, g, method)?;
            let table = Table {
                header: vec!["method", "omega0", "omega", "gamma", "kappa"],
                rows: vec![vec![format!("{method:?}"), num(w0), num(w), num(g), format!("{kappa:.15e}")]],
            };
            let value = serde_json::json!({ "method": method, "omega0": w0, "omega": w, "gamma": g, "kappa": kappa });
            emit("kappa", &cfg, Payload::Table(table, value), &format!("kappa = {kappa:.15}"))
        }
        Command::GcCheck(a) => {
            let mut cfg = load(&a.common)?;
            let chain = chain(&mut cfg, &a.chain)?;
            let sim = a.sim.resolve(cfg.sim.take())?;
            cfg.sim = Some(sim.clone());
            warn_all(sim.validate(&chain)?);
            let bins = a.bins.or(cfg.gc.as_ref().map(|g| g.bins)).unwrap_or(20);
            cfg.gc = Some(super::config::GcTask { bins });
            let report = gc_histogram_check(&chain, &sim, bins)?;
            let table = Table {
                header: vec!["sigma_hat", "deviation"],
                rows: report.deviations.iter().map(|(s, d)| vec![num(*s), num(*d)]).collect(),
            };
            let summary = format!(
                "gc-check: max |d| = {:.6e} over {} bin pairs at t = {}",
                report.max_deviation, report.usable_pairs, report.t
            );
            emit("gc-check", &cfg, Payload::Table(table, serde_json::to_value(&report)?), &summary)
        }
        Command::GdbCheck(a) => {
            let mut cfg = load(&a.common)?;
            let chain = chain(&mut cfg, &a.chain)?;
            let max_degree = a.max_degree.or(cfg.gdb.as_ref().map(|g| g.max_degree)).unwrap_or(4);
            cfg.gdb = Some(super::config::GdbTask { max_degree });
            let reference = ReferenceMeasureSpec::from_config(&chain);
            let residual = check_gdb(&chain, &reference, TestFamily { max_degree })?;
            let table = Table { header: vec!["max_degree", "residual"], rows: vec![vec![max_degree.to_string(), num(residual)]] };
            let value = serde_json::json!({ "max_degree": max_degree, "residual": residual });
            emit("gdb-check", &cfg, Payload::Table(table, value), &format!("gdb-check: residual = {residual:.3e}"))
        }
        Command::Positivity(a) => {
            let mut cfg = load(&a.common)?;
            let chain = chain(&mut cfg, &a.chain)?;
            let sim = a.sim.resolve(cfg.sim.take())?;
            cfg.sim = Some(sim.clone());
            warn_all(sim.validate(&chain)?);
            let t = current_sign_test(&chain, &sim)?;
            let table = Table {
                header: vec!["tau", "mean", "stderr", "pass"],
                rows: vec![vec![num(chain.tau()), num(t.mean), num(t.stderr), t.pass.to_string()]],
            };
            let summary = format!(
                "positivity: {} (tau = {}, <J> = {:.6e} +- {:.6e})",
                if t.pass { "PASS" } else { "FAIL" },
                chain.tau(),
                t.mean,
                t.stderr
            );
            emit("positivity", &cfg, Payload::Table(table, serde_json::to_value(&t)?), &summary)
        }
        Command::LyapunovScan(a) => {
            let mut cfg = load(&a.common)?;
            let chain = chain(&mut cfg, &a.chain)?;
            let task = cfg.lyapunov.take();
            let b = a.b.or(task.as_ref().and_then(|t| t.b)).unwrap_or(0.5 * chain.lyapunov_b_bound());
            let probes = a.probes.or(task.as_ref().map(|t| t.probes)).unwrap_or(2_000);
            let checks = a.checks.or(task.as_ref().map(|t| t.checks)).unwrap_or(100_000);
            cfg.lyapunov = Some(super::config::LyapunovTask { b: Some(b), probes, checks });
            if !crate::chain::b_is_admissible(&chain, b) {
                return Err(Error::Precondition(format!(
                    "b = {b} is not admissible (must lie in (0, {}))",
                    chain.lyapunov_b_bound()
                )));
            }
            let reference = ReferenceMeasureSpec::from_config(&chain);
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let probe_states = sample_probe_states(chain.n(), probes, &mut rng);
            let fit = fit_lyapunov_constants(&chain, &reference, b, &probe_states)?;
            let check_states = sample_probe_states(chain.n(), checks, &mut rng);
            let violations = count_violations(&chain, &reference, b, fit, &check_states)?;
            let table = Table {
                header: vec!["b", "c1", "c2", "checked", "violations"],
                rows: vec![vec![num(b), num(fit.c1), num(fit.c2), checks.to_string(), violations.to_string()]],
            };
            let value = serde_json::json!({ "b": b, "c1": fit.c1, "c2": fit.c2, "checked": checks, "violations": violations });
            let summary = format!("lyapunov-scan: c1 = {:.6e}, c2 = {:.6e}, {violations} violations in {checks} states", fit.c1, fit.c2);
            emit("lyapunov-scan", &cfg, Payload::Table(table, value), &summary)
        }
        Command::Prop4Check(a) => {
            let mut cfg = load(&a.common)?;
            let task = cfg.prop4.take();
            let n_list = a.n_list.or(task.as_ref().map(|t| t.n_list.clone())).unwrap_or_else(|| vec![11, 51, 201]);
            let lambda_prime = a.lambda_prime.or(task.as_ref().map(|t| t.lambda_prime)).unwrap_or(1.0);
            let tau_prime = a.tau_prime.or(task.as_ref().map(|t| t.tau_prime)).unwrap_or(0.0);
            cfg.prop4 = Some(super::config::Prop4Task { n_list: n_list.clone(), lambda_prime, tau_prime });
            cfg.validate()?;
            let base = cfg.chain.as_ref().and_then(|c| c.uniform_harmonic_periodic());
            let t = a.chain.temperature.or(base.map(|b| b.0)).unwrap_or(1.0);
            let w0 = a.chain.omega0.or(base.map(|b| b.1)).unwrap_or(1.0);
            let w = a.chain.omega.or(base.map(|b| b.2)).unwrap_or(1.0);
            let g = a.chain.gamma.or(base.map(|b| b.3)).unwrap_or(1.0);
            let report = prop4_check(&n_list, lambda_prime, tau_prime, t, w0, w, g)?;
            let table = Table {
                header: vec!["N", "NF", "limit", "abs_error"],
                rows: report.rows.iter().map(|r| vec![r.n.to_string(), num(r.nf), num(r.limit), num(r.abs_error)]).collect(),
            };
            let summary = format!(
                "prop4-check: limit = {:.7}, final N*F = {:.7}, errors monotone: {}, decay order {}",
                report.limit,
                report.rows.last().map_or(f64::NAN, |r| r.nf),
                report.monotone,
                report.decay_orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(",")
            );
            emit("prop4-check", &cfg, Payload::Table(table, serde_json::to_value(&report)?), &summary)
        }
    }
}

fn scgf_command(name: &str, method: CurveMethod, a: super::ScgfArgs) -> Result<()> {
    let mut cfg = load(&a.common)?;
    let chain = chain(&mut cfg, &a.chain)?;
    let grid = lambda_grid(&mut cfg, a.lambda)?;
    let curve = scgf_curve(method, &chain, &grid)?;
    let summary = curve_summary(name, &curve);
    emit(name, &cfg, Payload::Curve(CurveData::Scgf(curve)), &summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop4Row {
    #[serde(rename = "N")]
    pub n: usize,
    pub nf: f64,
    pub limit: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop4Report {
    pub limit: f64,
    pub rows: Vec<Prop4Row>,
    pub monotone: bool,
    /// `log(e_i / e_{i+1}) / log(N_{i+1} / N_i)` for consecutive entries.
    pub decay_orders: Vec<f64>,
}

/// `N F(lambda'/N, tau'/N)` from the Gaussian optimum for every `N`,
/// against `kappa (lambda' tau' + lambda'^2 T^2)`.
pub fn prop4_check(
    n_list: &[usize],
    lambda_prime: f64,
    tau_prime: f64,
    temperature: f64,
    omega0: f64,
    omega: f64,
    gamma: f64,
) -> Result<Prop4Report> {
    if !(omega0 > 0.0) {
        return Err(Error::Precondition("the large-N limit needs omega0 > 0".into()));
    }
    let limit = scaled_limit_f(lambda_prime, tau_prime, temperature, omega0, omega, gamma)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let ring = RingParams::new(n, temperature, omega0, omega, gamma)?;
            let nf = n as f64 * optimize_scgf(&ring, lambda_prime / n as f64, tau_prime / n as f64)?.f;
            Ok(Prop4Row { n, nf, limit, abs_error: (nf - limit).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].abs_error < w[0].abs_error);
    let decay_orders = rows
        .windows(2)
        .map(|w| (w[0].abs_error / w[1].abs_error).ln() / (w[1].n as f64 / w[0].n as f64).ln())
        .collect();
    Ok(Prop4Report { limit, rows, monotone, decay_orders })
}
