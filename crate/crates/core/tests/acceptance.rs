//! Acceptance suite. Every criterion prints one `criterion <id>: PASS|FAIL`
//! line; the process exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ldchain::chain::{
    b_is_admissible, check_gdb, check_gdb_with_sigma, count_violations, fit_lyapunov_constants, local_current,
    sample_probe_states, Boundary, ChainConfig, PotentialSpec, ReferenceMeasureSpec,
};
use ldchain::cli::prop4_check;
use ldchain::gaussian::{
    conductivity_kappa, optimize_scgf, single_oscillator_k, single_oscillator_k_variational, KappaMethod, RingParams,
};
use ldchain::sim::{current_sign_test, empirical_scgf, integrate, SimSpec};
use ldchain::tilted::{build_linear_system, scgf_riccati};

const SEED: u64 = 2024;

fn report(id: u32, pass: bool, detail: String, started: Instant) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} ({detail}; {:.2} s)", started.elapsed().as_secs_f64());
    pass
}

fn info(id: u32, detail: String) {
    println!("criterion {id}: info: {detail}");
}

fn unit_ring(n: usize) -> RingParams {
    RingParams::new(n, 1.0, 1.0, 1.0, 1.0).unwrap()
}

fn periodic(n: usize, tau: f64) -> ChainConfig {
    ChainConfig::harmonic_uniform(n, Boundary::Periodic, 1.0, 1.0, 1.0, 1.0, tau).unwrap()
}

/// `sum_k sin^2(2 pi k/N) / omega_k^2` over all `N` Fourier indices.
fn quadratic_coefficient(n: usize, omega_k_sq: impl Fn(usize) -> f64) -> f64 {
    (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin().powi(2) / omega_k_sq(k)).sum()
}

/// `sum_k (1/omega_k^6 + 5/omega_k^4) sin^4(2 pi k/N)`.
fn quartic_coefficient(n: usize, omega_k_sq: impl Fn(usize) -> f64) -> f64 {
    (0..n)
        .map(|k| {
            let w2 = omega_k_sq(k);
            (1.0 / w2.powi(3) + 5.0 / (w2 * w2)) * (2.0 * PI * k as f64 / n as f64).sin().powi(4)
        })
        .sum()
}

/// Dispersion written with `sin^2(2 pi k/N)` instead of the normal-mode `sin^2(pi k/N)`.
fn doubled_dispersion(n: usize) -> impl Fn(usize) -> f64 {
    move |k| 1.0 + 4.0 * (2.0 * PI * k as f64 / n as f64).sin().powi(2)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-15)
}

fn criterion_01_quadratic_term() -> bool {
    let started = Instant::now();
    let lambda = 1e-3;
    let mut worst = 0f64;
    let mut parts = Vec::new();
    for n in [3, 5, 7] {
        let ring = unit_ring(n);
        let target = quadratic_coefficient(n, |k| ring.omega_k_sq(k));
        let got = optimize_scgf(&ring, lambda, 0.0).unwrap().f / (lambda * lambda);
        let err = (got - target).abs() / target;
        worst = worst.max(err);
        parts.push(format!("N={n}: F/lambda^2={got:.8} target={target:.8} rel={err:.1e}"));
        info(
            1,
            format!(
                "N={n}: sum with the sin^2(2 pi k/N) dispersion = {:.8}",
                quadratic_coefficient(n, doubled_dispersion(n))
            ),
        );
    }
    let n3 = quadratic_coefficient(3, |k| unit_ring(3).omega_k_sq(k));
    report(1, worst < 1e-4 && (n3 - 0.375).abs() < 1e-14, parts.join(", "), started)
}

fn criterion_02_quartic_term() -> bool {
    let started = Instant::now();
    let ring = unit_ring(3);
    let lambdas = [5e-3, 10e-3, 20e-3];
    // F/lambda^2 = c2 + c4 x + c6 x^2 with x = lambda^2, fitted through three points
    let x: Vec<f64> = lambdas.iter().map(|l| l * l).collect();
    let g: Vec<f64> = lambdas.iter().map(|&l| optimize_scgf(&ring, l, 0.0).unwrap().f / (l * l)).collect();
    let d12 = (g[1] - g[0]) / (x[1] - x[0]);
    let d23 = (g[2] - g[1]) / (x[2] - x[1]);
    let d123 = (d23 - d12) / (x[2] - x[0]);
    let c4 = d12 - d123 * (x[0] + x[1]);
    let target = quartic_coefficient(3, |k| ring.omega_k_sq(k));
    let err = (c4 - target).abs() / target;
    report(2, err < 0.01, format!("c4={c4:.9} target={target:.9} rel={err:.1e}"), started)
}

fn criterion_03_oracle_equivalence() -> bool {
    let started = Instant::now();
    // F vanishes exactly at lambda = 0 and lambda = -tau; the grid steps around
    // those points and they are compared in absolute terms instead
    let grid: Vec<f64> = (0..11).map(|i| -0.0525 + 0.01 * i as f64).collect();
    let mut worst = 0f64;
    let mut worst_zero = 0f64;
    for (n, tau) in [(3, 0.0), (5, 0.05), (11, 0.02)] {
        let sys = build_linear_system(n, 1.0, 1.0, 1.0, 1.0, tau).unwrap();
        for &l in &grid {
            let riccati = scgf_riccati(&sys, l).unwrap();
            let gaussian = optimize_scgf(&unit_ring(n), l, tau).unwrap().f;
            worst = worst.max(relative(riccati, gaussian));
        }
        for l in [0.0, -tau] {
            let diff = scgf_riccati(&sys, l).unwrap() - optimize_scgf(&unit_ring(n), l, tau).unwrap().f;
            worst_zero = worst_zero.max(diff.abs());
        }
    }
    info(3, format!("at the exact zeros lambda = 0 and lambda = -tau the absolute difference is {worst_zero:.1e}"));
    report(3, worst < 1e-8, format!("max relative difference {worst:.2e} over 33 points"), started)
}

fn criterion_04_large_n_limit() -> bool {
    let started = Instant::now();
    let target = 0.1381966 * 1.5;
    let rep = prop4_check(&[11, 51, 201], 1.0, 0.5, 1.0, 1.0, 1.0, 1.0).unwrap();
    let errors: Vec<f64> = rep.rows.iter().map(|r| (r.nf - target).abs()).collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let final_rel = errors.last().unwrap() / target;
    let values: Vec<String> = rep.rows.iter().map(|r| format!("N={}: {:.7}", r.n, r.nf)).collect();
    info(
        4,
        format!(
            "against the normal-mode conductivity limit {:.7}: final relative error {:.2e}, monotone {}, decay orders {:?}",
            rep.limit,
            rep.rows.last().unwrap().abs_error / rep.limit,
            rep.monotone,
            rep.decay_orders
        ),
    );
    report(
        4,
        monotone && final_rel < 0.02,
        format!("{}; target {target:.7}, final relative error {final_rel:.3}, monotone {monotone}", values.join(", ")),
        started,
    )
}

fn criterion_05_conductivity() -> bool {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_literal = 0f64;
    let mut worst_methods = 0f64;
    for _ in 0..10 {
        use rand::Rng;
        let (w0, w, g) = (rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0));
        let quad = conductivity_kappa(w0, w, g, KappaMethod::Quadrature).unwrap();
        let sum = conductivity_kappa(w0, w, g, KappaMethod::DiscreteSum(1001)).unwrap();
        let closed = conductivity_kappa(w0, w, g, KappaMethod::ClosedForm).unwrap();
        let literal = w * w / (4.0 * g) * (1.0 - w0 / (w0 * w0 + 4.0 * w * w).sqrt());
        worst_methods = worst_methods.max((quad - sum).abs()).max((quad - closed).abs());
        worst_literal = worst_literal.max((literal - quad).abs()).max((literal - sum).abs());
    }
    info(5, format!("quadrature, DiscreteSum(1001) and the library closed form agree to {worst_methods:.1e}"));
    report(
        5,
        worst_methods < 1e-8 && worst_literal < 1e-8,
        format!("closed form (omega^2/4 gamma)(1 - omega0/sqrt(omega0^2 + 4 omega^2)) differs by up to {worst_literal:.3e}"),
        started,
    )
}

fn criterion_06_fluctuation_symmetry() -> bool {
    let started = Instant::now();
    let tau = 0.05;
    let sys = build_linear_system(5, 1.0, 1.0, 1.0, 1.0, tau).unwrap();
    // offset grid: avoids the two points where F vanishes identically
    let grid: Vec<f64> = (0..11).map(|i| -0.0725 + 0.01 * i as f64).collect();
    let worst = grid
        .iter()
        .map(|&l| relative(scgf_riccati(&sys, l).unwrap(), scgf_riccati(&sys, -l - tau).unwrap()))
        .fold(0f64, f64::max);
    report(6, worst < 1e-9, format!("max relative asymmetry {worst:.2e}"), started)
}

fn criterion_07_generalized_detailed_balance() -> bool {
    let started = Instant::now();
    let cfg = ChainConfig::new(2, Boundary::Open, PotentialSpec::harmonic(1.0, 1.0), vec![1.0; 2], vec![1.0, 2.0], vec![0.0; 2], 0.0)
        .unwrap();
    let reference = ReferenceMeasureSpec::new(vec![1.0, 0.5]).unwrap();
    let family = Default::default();
    let built = check_gdb(&cfg, &reference, family).unwrap();
    let explicit = check_gdb_with_sigma(&cfg, &reference, family, |c, s| 0.5 * local_current(c, s, 0).unwrap()).unwrap();
    let control = check_gdb_with_sigma(&cfg, &reference, family, |_, _| 0.0).unwrap();
    report(
        7,
        built < 1e-10 && explicit < 1e-10 && control > 1e-3,
        format!("residual {explicit:.1e} (built-in sigma {built:.1e}), sigma = 0 control {control:.3}"),
        started,
    )
}

fn criterion_08_single_oscillator() -> bool {
    let started = Instant::now();
    let k = single_oscillator_k(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
    let variational = single_oscillator_k_variational(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
    let equal = [(1.0, 1.0, 1.0, 1.0), (0.3, 2.0, 0.5, 4.0), (5.0, 0.1, 3.0, 0.2)]
        .iter()
        .all(|&(a, g, t, w)| single_oscillator_k(a, a, g, t, w).unwrap() == 0.0);
    report(
        8,
        (k - 0.125).abs() < 1e-15 && (variational - k).abs() < 1e-6 && equal,
        format!("K={k}, variational {variational:.12}, K(a,a)=0 {equal}"),
        started,
    )
}

fn criterion_09_simulation_physics() -> bool {
    let started = Instant::now();
    let dt = 1e-3;
    let t = 1e4;

    let eq = integrate(&periodic(5, 0.0), &SimSpec::new(dt, t, SEED, 2), &ldchain::chain::State::zeros(5)).unwrap();
    let z_max = eq
        .kinetic_temps
        .iter()
        .zip(&eq.kinetic_temps_stderr)
        .map(|(tk, se)| (tk - 1.0).abs() / se)
        .fold(0f64, f64::max);
    let part_a = z_max < 4.0;

    let sim = SimSpec::new(dt, t, SEED, 2);
    let up = current_sign_test(&periodic(5, 0.1), &sim).unwrap();
    let down = current_sign_test(&periodic(5, -0.1), &sim).unwrap();
    let part_b = up.pass && down.pass;

    let (n, tau) = (11, 0.02);
    let run = integrate(&periodic(n, tau), &SimSpec::new(dt, t, SEED, 8), &ldchain::chain::State::zeros(n)).unwrap();
    let kappa = conductivity_kappa(1.0, 1.0, 1.0, KappaMethod::ClosedForm).unwrap();
    let (nj, se) = (n as f64 * run.time_avg_current, n as f64 * run.time_avg_current_stderr);
    let expected = kappa * n as f64 * tau;
    let z_c = (nj - expected).abs() / se;
    let part_c = z_c < 3.0;
    info(9, format!("(c) distance to kappa N tau with kappa = 0.1381966: {:.2} sigma", (nj - 0.1381966 * n as f64 * tau).abs() / se));
    report(
        9,
        part_a && part_b && part_c,
        format!(
            "(a) max |T_k - 1|/se = {z_max:.2}; (b) tau=+0.1: {:.3e}+-{:.1e}, tau=-0.1: {:.3e}+-{:.1e}; \
             (c) N<J> = {nj:.5}+-{se:.5} vs {expected:.5} ({z_c:.2} sigma)",
            up.mean, up.stderr, down.mean, down.stderr
        ),
        started,
    )
}

fn criterion_10_empirical_scgf() -> bool {
    let started = Instant::now();
    let cfg = periodic(3, 0.0);
    let sim = SimSpec::new(0.01, 6667.0, SEED, 200);
    let grid = [-0.02, 0.02];
    let curve = empirical_scgf(&cfg, &sim, &grid).unwrap();
    let sys = build_linear_system(3, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in &curve.points {
        let exact = scgf_riccati(&sys, p.lambda).unwrap();
        let rel = (p.value - exact).abs() / exact.abs();
        pass &= rel < 0.1 && !p.low_ess;
        parts.push(format!(
            "lambda={}: {:.4e}+-{:.1e} vs {exact:.4e} (rel {rel:.3}, low_ess {})",
            p.lambda,
            p.value,
            p.stderr.unwrap_or(f64::NAN),
            p.low_ess
        ));
    }
    report(10, pass, parts.join("; "), started)
}

fn criterion_11_lyapunov() -> bool {
    let started = Instant::now();
    let cfg = periodic(5, 0.0);
    let reference = ReferenceMeasureSpec::from_config(&cfg);
    let b = 0.5 * cfg.lyapunov_b_bound();
    let mut probe_rng = ChaCha8Rng::seed_from_u64(SEED);
    probe_rng.set_stream(1);
    let mut check_rng = ChaCha8Rng::seed_from_u64(SEED);
    check_rng.set_stream(2);
    let probes = sample_probe_states(5, 2000, &mut probe_rng);
    let fit = fit_lyapunov_constants(&cfg, &reference, b, &probes).unwrap();
    let states = sample_probe_states(5, 100_000, &mut check_rng);
    let violations = count_violations(&cfg, &reference, b, fit, &states).unwrap();
    report(
        11,
        b_is_admissible(&cfg, b) && violations == 0,
        format!("b={b:.4}, c1={:.4e}, c2={:.4e}, {violations} violations in 100000 states", fit.c1, fit.c2),
        started,
    )
}

fn main() {
    let criteria: [fn() -> bool; 11] = [
        criterion_01_quadratic_term,
        criterion_02_quartic_term,
        criterion_03_oracle_equivalence,
        criterion_04_large_n_limit,
        criterion_05_conductivity,
        criterion_06_fluctuation_symmetry,
        criterion_07_generalized_detailed_balance,
        criterion_08_single_oscillator,
        criterion_09_simulation_physics,
        criterion_10_empirical_scgf,
        criterion_11_lyapunov,
    ];
    let failed = criteria.iter().filter(|run| !run()).count();
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
