//! C ABI over `ldchain`.
//!
//! Objects cross the boundary as opaque handles (`LdChain`, `LdStats`) owned
//! by the caller and released with the matching `*_free`. Every function
//! returns an [`LdStatus`]; on failure the message is available from
//! [`ld_last_error_message`] on the same thread. Panics are caught at the
//! boundary and reported as `LD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ldchain::chain::{hamiltonian, mean_current, Boundary, ChainConfig, State};
use ldchain::gaussian::{conductivity_kappa, optimize_scgf, KappaMethod, RingParams};
use ldchain::sim::{integrate, SimSpec, TrajectoryStats};
use ldchain::tilted::{linear_system_from_config, scgf_riccati};
use ldchain::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LdKappaMethod {
    Quadrature = 0,
    ClosedForm = 1,
    DiscreteSum = 2,
}

/// Opaque chain configuration.
pub struct LdChain {
    inner: ChainConfig,
}

/// Opaque simulation result.
pub struct LdStats {
    inner: TrajectoryStats,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> LdStatus {
    match e {
        Error::Io(_) => LdStatus::Io,
        e if e.is_numerical() => LdStatus::Numerical,
        _ => LdStatus::InvalidArgument,
    }
}

/// Runs `f` with panics and library errors mapped to status codes.
fn guard(f: impl FnOnce() -> Result<(), (LdStatus, String)>) -> LdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LdStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LdStatus::Panic
        }
    }
}

fn lib<T>(r: ldchain::Result<T>) -> Result<T, (LdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (LdStatus, String) {
    (LdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn chain_ref<'a>(chain: *const LdChain) -> Result<&'a ChainConfig, (LdStatus, String)> {
    chain.as_ref().map(|c| &c.inner).ok_or_else(|| null("chain"))
}

unsafe fn state_from(q: *const f64, p: *const f64, len: usize, n: usize) -> Result<State, (LdStatus, String)> {
    if q.is_null() || p.is_null() {
        return Err(null("state buffer"));
    }
    if len != n {
        return Err((LdStatus::InvalidArgument, format!("state length {len} does not match N = {n}")));
    }
    Ok(State { q: std::slice::from_raw_parts(q, len).to_vec(), p: std::slice::from_raw_parts(p, len).to_vec() })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (LdStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ld_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ld_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Uniform harmonic chain. `periodic` selects ring (non-zero) or fixed walls (zero).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ld_chain_new_harmonic(
    n: usize,
    periodic: i32,
    omega0: f64,
    omega: f64,
    gamma: f64,
    temperature: f64,
    tau: f64,
    out: *mut *mut LdChain,
) -> LdStatus {
    guard(|| {
        let boundary = if periodic != 0 { Boundary::Periodic } else { Boundary::Open };
        let inner = lib(ChainConfig::harmonic_uniform(n, boundary, omega0, omega, gamma, temperature, tau))?;
        write_out(out, Box::into_raw(Box::new(LdChain { inner })))
    })
}

/// Chain from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_chain_from_json(json: *const c_char, out: *mut *mut LdChain) -> LdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (LdStatus::InvalidArgument, e.to_string()))?;
        let inner: ChainConfig = serde_json::from_str(text).map_err(|e| (LdStatus::InvalidArgument, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(LdChain { inner })))
    })
}

/// Releases a chain handle. NULL is ignored.
///
/// # Safety
/// `chain` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ld_chain_free(chain: *mut LdChain) {
    if !chain.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(chain))));
    }
}

/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_chain_sites(chain: *const LdChain, out: *mut usize) -> LdStatus {
    guard(|| write_out(out, chain_ref(chain)?.n()))
}

/// Total energy at `(q, p)`, each of length `len == N`.
///
/// # Safety
/// Buffers must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_hamiltonian(
    chain: *const LdChain,
    q: *const f64,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> LdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let s = state_from(q, p, len, c.n())?;
        write_out(out, lib(hamiltonian(c, &s))?)
    })
}

/// Mean current `J = (1/N) sum_i j_i` at `(q, p)`.
///
/// # Safety
/// Buffers must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_mean_current(
    chain: *const LdChain,
    q: *const f64,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> LdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let s = state_from(q, p, len, c.n())?;
        write_out(out, lib(mean_current(c, &s))?)
    })
}

/// SCGF of `N lambda int J` from the Gaussian variational calculus
/// (uniform harmonic ring only).
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_scgf_gaussian(chain: *const LdChain, lambda: f64, out: *mut f64) -> LdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let ring = lib(RingParams::from_config(c))?;
        write_out(out, lib(optimize_scgf(&ring, lambda, c.tau()))?.f)
    })
}

/// SCGF of `N lambda int J` from the tilted-generator Riccati equation
/// (any harmonic chain).
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_scgf_riccati(chain: *const LdChain, lambda: f64, out: *mut f64) -> LdStatus {
    guard(|| {
        let sys = lib(linear_system_from_config(chain_ref(chain)?))?;
        write_out(out, lib(scgf_riccati(&sys, lambda))?)
    })
}

/// Conductivity of the harmonic ring. `n` is only read by `DiscreteSum`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ld_kappa(
    omega0: f64,
    omega: f64,
    gamma: f64,
    method: LdKappaMethod,
    n: usize,
    out: *mut f64,
) -> LdStatus {
    guard(|| {
        let m = match method {
            LdKappaMethod::Quadrature => KappaMethod::Quadrature,
            LdKappaMethod::ClosedForm => KappaMethod::ClosedForm,
            LdKappaMethod::DiscreteSum => KappaMethod::DiscreteSum(n),
        };
        write_out(out, lib(conductivity_kappa(omega0, omega, gamma, m))?)
    })
}

/// Langevin run from rest with the default splitting scheme and burn-in.
///
/// # Safety
/// `chain` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ld_simulate(
    chain: *const LdChain,
    dt: f64,
    t_sample: f64,
    seed: u64,
    n_replicas: usize,
    out: *mut *mut LdStats,
) -> LdStatus {
    guard(|| {
        let c = chain_ref(chain)?;
        let sim = SimSpec::new(dt, t_sample, seed, n_replicas);
        let inner = lib(integrate(c, &sim, &State::zeros(c.n())))?;
        write_out(out, Box::into_raw(Box::new(LdStats { inner })))
    })
}

/// Time-averaged mean current and its standard error.
///
/// # Safety
/// `stats` must be a live handle; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ld_stats_mean_current(stats: *const LdStats, mean: *mut f64, std_error: *mut f64) -> LdStatus {
    guard(|| {
        let s = &stats.as_ref().ok_or_else(|| null("stats"))?.inner;
        if std_error.is_null() {
            return Err(null("std_error"));
        }
        write_out(mean, s.time_avg_current)?;
        write_out(std_error, s.time_avg_current_stderr)
    })
}

/// Copies the kinetic temperatures into `buf` (`len` must equal N).
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ld_stats_kinetic_temps(stats: *const LdStats, buf: *mut f64, len: usize) -> LdStatus {
    guard(|| {
        let s = &stats.as_ref().ok_or_else(|| null("stats"))?.inner;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len != s.kinetic_temps.len() {
            return Err((LdStatus::InvalidArgument, format!("buffer length {len}, expected {}", s.kinetic_temps.len())));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&s.kinetic_temps);
        Ok(())
    })
}

/// Releases a statistics handle. NULL is ignored.
///
/// # Safety
/// `stats` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ld_stats_free(stats: *mut LdStats) {
    if !stats.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(stats))));
    }
}
