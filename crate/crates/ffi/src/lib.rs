//! C ABI for `fvlab`.
//!
//! Every entry point returns an [`FvStatus`] and writes results through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`fvlab_last_error`]. Simulators and QSD oracles are opaque handles that
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fvlab::analysis::qsd::{compute_qsd_oracle, QsdOracle};
use fvlab::rates;
use fvlab::sim::Simulator;
use fvlab::{Configuration, Error, RngStream, Schedule, WalkParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonConvergence = 3,
    BufferTooSmall = 4,
    Panic = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FvSchedule {
    pub n_walks: usize,
    pub big_a: f64,
    pub t_horizon: f64,
    pub l_threshold: f64,
    pub kappa: f64,
    pub delta0: f64,
}

impl From<Schedule> for FvSchedule {
    fn from(s: Schedule) -> Self {
        Self {
            n_walks: s.n_walks,
            big_a: s.big_a,
            t_horizon: s.t_horizon,
            l_threshold: s.l_threshold,
            kappa: s.kappa,
            delta0: s.delta0,
        }
    }
}

/// Opaque Fleming-Viot replica.
pub struct FvSimulator {
    sim: Simulator,
    elapsed: f64,
}

/// Opaque truncated QSD.
pub struct FvQsdOracle {
    oracle: QsdOracle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NonConvergence { .. } => FvStatus::NonConvergence,
            ref e if e.is_usage() => FvStatus::InvalidArgument,
            _ => FvStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FvStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside fvlab".into());
            FvStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn fvlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fvlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `Lambda(lam) = log(p e^lam + q e^-lam) + lam v`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_lambda(p: f64, lam: f64, out: *mut f64) -> FvStatus {
    guard(|| {
        let w = WalkParams::new(p)?;
        if !lam.is_finite() {
            return Err(Failure(FvStatus::InvalidArgument, "lam must be finite".into()));
        }
        write(out, rates::lambda_fn(&w, lam), "out")
    })
}

/// Rate function `I(x)`; `+inf` above `v + 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_rate_i(p: f64, x: f64, out: *mut f64) -> FvStatus {
    guard(|| {
        let w = WalkParams::new(p)?;
        write(out, rates::rate_i(&w, x).value.as_f64(), "out")
    })
}

/// `1 - exp(-I(x))`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_rate_i_tilde(p: f64, x: f64, out: *mut f64) -> FvStatus {
    guard(|| {
        let w = WalkParams::new(p)?;
        write(out, rates::rate_i_tilde(&w, x).value.as_f64(), "out")
    })
}

/// `P(Poisson(t) >= e t + chi)` and `exp(-t - chi)`.
///
/// # Safety
/// `exact` and `bound` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_poisson_tail_upper(t: f64, chi: f64, exact: *mut f64, bound: *mut f64) -> FvStatus {
    guard(|| {
        let tb = rates::poisson_tail_upper(t, chi)?;
        write(exact, tb.exact, "exact")?;
        write(bound, tb.bound, "bound")
    })
}

/// `P(Poisson(t) <= t / e - chi)` and `exp(-(1 - 2/e) t - chi)`.
///
/// # Safety
/// `exact` and `bound` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_poisson_tail_lower(t: f64, chi: f64, exact: *mut f64, bound: *mut f64) -> FvStatus {
    guard(|| {
        let tb = rates::poisson_tail_lower(t, chi)?;
        write(exact, tb.exact, "exact")?;
        write(bound, tb.bound, "bound")
    })
}

/// Schedule with the smallest `A` putting every kappa term above `margin`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_schedule_minimal(p: f64, n_walks: usize, margin: f64, out: *mut FvSchedule) -> FvStatus {
    guard(|| {
        let w = WalkParams::new(p)?;
        write(out, Schedule::minimal(&w, n_walks, margin)?.into(), "out")
    })
}

/// Schedule for an explicit `A`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_schedule_with_big_a(p: f64, n_walks: usize, big_a: f64, out: *mut FvSchedule) -> FvStatus {
    guard(|| {
        let w = WalkParams::new(p)?;
        write(out, Schedule::with_big_a(&w, n_walks, big_a)?.into(), "out")
    })
}

/// New simulator from `n` positions (all `>= 1`, `n >= 2`).
///
/// # Safety
/// `positions` must point to `n` readable values; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_simulator_new(
    p: f64,
    positions: *const i64,
    n: usize,
    seed: u64,
    stream_id: u64,
    out: *mut *mut FvSimulator,
) -> FvStatus {
    guard(|| {
        if positions.is_null() {
            return Err(null("positions"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let w = WalkParams::new(p)?;
        let config = Configuration::new(std::slice::from_raw_parts(positions, n).to_vec())?;
        let handle = Box::new(FvSimulator {
            sim: Simulator::new(config, w, RngStream::new(seed, stream_id)),
            elapsed: 0.0,
        });
        out.write(Box::into_raw(handle));
        Ok(())
    })
}

/// Release a simulator. Null is ignored.
///
/// # Safety
/// `sim` must come from [`fvlab_simulator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fvlab_simulator_free(sim: *mut FvSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn sim_ref<'a>(sim: *const FvSimulator) -> Result<&'a FvSimulator, Failure> {
    sim.as_ref().ok_or_else(|| null("sim"))
}

/// Run for `duration` time units; `events` (optional) receives the number
/// of events.
///
/// # Safety
/// `sim` must be a live handle; `events` is null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_simulator_advance(sim: *mut FvSimulator, duration: f64, events: *mut u64) -> FvStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Failure(FvStatus::InvalidArgument, format!("bad duration {duration}")));
        }
        let n = s.sim.advance_by(duration, 1024.0);
        s.elapsed += duration;
        if !events.is_null() {
            events.write(n);
        }
        Ok(())
    })
}

/// Total simulated time.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_simulator_time(sim: *const FvSimulator, out: *mut f64) -> FvStatus {
    guard(|| write(out, sim_ref(sim)?.elapsed, "out"))
}

/// Rightmost position.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_simulator_max(sim: *const FvSimulator, out: *mut i64) -> FvStatus {
    guard(|| write(out, sim_ref(sim)?.sim.max(), "out"))
}

/// Number of walks.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_simulator_n(sim: *const FvSimulator, out: *mut usize) -> FvStatus {
    guard(|| write(out, sim_ref(sim)?.sim.n(), "out"))
}

/// Copy positions into `buf`, which must hold at least `n` values.
///
/// # Safety
/// `sim` must be a live handle; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_simulator_positions(sim: *const FvSimulator, buf: *mut i64, len: usize) -> FvStatus {
    guard(|| {
        let pos = sim_ref(sim)?.sim.positions();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < pos.len() {
            return Err(Failure(
                FvStatus::BufferTooSmall,
                format!("buffer holds {len}, need {}", pos.len()),
            ));
        }
        ptr::copy_nonoverlapping(pos.as_ptr(), buf, pos.len());
        Ok(())
    })
}

/// Truncated QSD with doubling from `truncation` until stable within
/// `10 tol`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_qsd_compute(p: f64, truncation: usize, tol: f64, out: *mut *mut FvQsdOracle) -> FvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = WalkParams::new(p)?;
        let oracle = compute_qsd_oracle(&w, truncation, tol)?;
        out.write(Box::into_raw(Box::new(FvQsdOracle { oracle })));
        Ok(())
    })
}

unsafe fn qsd_ref<'a>(o: *const FvQsdOracle) -> Result<&'a QsdOracle, Failure> {
    o.as_ref().map(|h| &h.oracle).ok_or_else(|| null("oracle"))
}

/// Final truncation, i.e. the number of sites carried.
///
/// # Safety
/// `oracle` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_qsd_len(oracle: *const FvQsdOracle, out: *mut usize) -> FvStatus {
    guard(|| write(out, qsd_ref(oracle)?.truncation, "out"))
}

/// Mass of `site`; zero off the support.
///
/// # Safety
/// `oracle` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_qsd_mass(oracle: *const FvQsdOracle, site: i64, out: *mut f64) -> FvStatus {
    guard(|| write(out, qsd_ref(oracle)?.mass(site), "out"))
}

/// `1 - rho` for the principal eigenvalue `rho`.
///
/// # Safety
/// `oracle` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fvlab_qsd_decay_rate(oracle: *const FvQsdOracle, out: *mut f64) -> FvStatus {
    guard(|| write(out, qsd_ref(oracle)?.decay_rate, "out"))
}

/// Release an oracle. Null is ignored.
///
/// # Safety
/// `oracle` must come from [`fvlab_qsd_compute`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fvlab_qsd_free(oracle: *mut FvQsdOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}
