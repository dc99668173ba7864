//! C ABI over the oracle, the two-timescale validator and the tabular
//! learners.
//!
//! Every function returns a [`GittinsStatus`]; on failure the message is
//! available from [`gittins_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gittins::env::{validate_two_timescale, ArmModel, LearningRateSchedule};
use gittins::oracle::{gittins_exact, RetirementSolution};
use gittins::tabular::{Algorithm, Pull, TabularLearner};
use gittins::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GittinsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfig = 3,
    ShapeMismatch = 4,
    Parse = 5,
    Io = 6,
    EmptySelection = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GittinsAlgorithm {
    Qgi = 0,
    Restart = 1,
    Qwi = 2,
}

/// Cumulative update counts returned by [`gittins_learner_update`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GittinsCounters {
    pub q_updates: u64,
    pub index_updates: u64,
    pub steps: u64,
}

pub struct GittinsArm(ArmModel);
pub struct GittinsSolution(RetirementSolution);
pub struct GittinsLearner {
    inner: TabularLearner,
    counters: GittinsCounters,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: GittinsStatus, msg: impl Into<String>) -> GittinsStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> GittinsStatus {
    let status = match e {
        Error::InvalidInput(_) => GittinsStatus::InvalidInput,
        Error::InvalidConfig(_) => GittinsStatus::InvalidConfig,
        Error::EmptySelection => GittinsStatus::EmptySelection,
        Error::ShapeMismatch { .. } => GittinsStatus::ShapeMismatch,
        Error::Parse { .. } => GittinsStatus::Parse,
        Error::Io(_) => GittinsStatus::Io,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> GittinsStatus) -> GittinsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(GittinsStatus::Panic, "internal panic"))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on this thread.
#[no_mangle]
pub extern "C" fn gittins_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds an arm from an `n * n` row-major transition matrix and `n` rewards.
///
/// # Safety
/// `transition` must point to `n * n` doubles, `reward` to `n` doubles and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gittins_arm_new(
    n: usize,
    transition: *const f64,
    reward: *const f64,
    out: *mut *mut GittinsArm,
) -> GittinsStatus {
    guard(|| {
        if transition.is_null() || reward.is_null() || out.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        let Some(nn) = n.checked_mul(n) else {
            return fail(GittinsStatus::InvalidInput, "state count overflows");
        };
        let p = std::slice::from_raw_parts(transition, nn).to_vec();
        let r = std::slice::from_raw_parts(reward, n).to_vec();
        match ArmModel::from_flat(n, p, r) {
            Ok(arm) => {
                *out = Box::into_raw(Box::new(GittinsArm(arm)));
                GittinsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// The five-state toy arm.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gittins_arm_toy(out: *mut *mut GittinsArm) -> GittinsStatus {
    guard(|| {
        if out.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        *out = Box::into_raw(Box::new(GittinsArm(ArmModel::toy())));
        GittinsStatus::Ok
    })
}

/// # Safety
/// `arm` must be null or a handle from `gittins_arm_new`/`gittins_arm_toy`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn gittins_arm_free(arm: *mut GittinsArm) {
    if !arm.is_null() {
        drop(Box::from_raw(arm));
    }
}

/// Exact indices and retirement thresholds of `arm`.
///
/// # Safety
/// `arm` must be a live arm handle and `out` writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gittins_solve(
    arm: *const GittinsArm,
    gamma: f64,
    tol: f64,
    out: *mut *mut GittinsSolution,
) -> GittinsStatus {
    guard(|| {
        if arm.is_null() || out.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        match gittins_exact(&(*arm).0, gamma, tol) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(GittinsSolution(sol)));
                GittinsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sol` must be a live solution handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gittins_solution_num_states(sol: *const GittinsSolution, out: *mut usize) -> GittinsStatus {
    guard(|| {
        if sol.is_null() || out.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        *out = (*sol).0.num_states();
        GittinsStatus::Ok
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> GittinsStatus {
    if out.is_null() {
        return fail(GittinsStatus::NullPointer, "null argument");
    }
    if len < src.len() {
        return fail(
            GittinsStatus::ShapeMismatch,
            format!("buffer holds {len} values, need {}", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    GittinsStatus::Ok
}

/// Copies the per-state indices into `out`, which holds `len` doubles.
///
/// # Safety
/// `sol` must be a live solution handle and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gittins_solution_indices(sol: *const GittinsSolution, out: *mut f64, len: usize) -> GittinsStatus {
    guard(|| {
        if sol.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        copy_out(&(*sol).0.indices, out, len)
    })
}

/// Copies the per-state retirement thresholds into `out`.
///
/// # Safety
/// As for [`gittins_solution_indices`].
#[no_mangle]
pub unsafe extern "C" fn gittins_solution_retirement(
    sol: *const GittinsSolution,
    out: *mut f64,
    len: usize,
) -> GittinsStatus {
    guard(|| {
        if sol.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        copy_out(&(*sol).0.retirement, out, len)
    })
}

/// # Safety
/// `sol` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn gittins_solution_free(sol: *mut GittinsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Whether the two-timescale schedule passes the validator over `horizon` steps.
///
/// # Safety
/// `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gittins_validate_two_timescale(
    x: f64,
    y: f64,
    theta: u64,
    kappa: u64,
    phi: u64,
    horizon: u64,
    passed: *mut bool,
) -> GittinsStatus {
    guard(|| {
        if passed.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        match LearningRateSchedule::two_timescale(x, y, theta, kappa, phi) {
            Ok(s) => {
                *passed = validate_two_timescale(&s, horizon).passed;
                GittinsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// A fresh learner with `tables` tables of `num_states` states.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn gittins_learner_new(
    algo: GittinsAlgorithm,
    num_states: usize,
    tables: usize,
    out: *mut *mut GittinsLearner,
) -> GittinsStatus {
    guard(|| {
        if out.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        let algo = match algo {
            GittinsAlgorithm::Qgi => Algorithm::Qgi,
            GittinsAlgorithm::Restart => Algorithm::Restart,
            GittinsAlgorithm::Qwi => Algorithm::Qwi,
        };
        match TabularLearner::new(algo, num_states, tables) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(GittinsLearner {
                    inner,
                    counters: GittinsCounters::default(),
                }));
                GittinsStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Applies one observed pull. QWI also takes the `num_passive` passive arms
/// as parallel `(table, state)` arrays; other algorithms ignore them.
/// Cumulative counters are written to `counters` when it is not null.
///
/// # Safety
/// `learner` must be a live handle; `passive_tables` and `passive_states`
/// must each point to `num_passive` values (or be null when it is zero).
#[no_mangle]
pub unsafe extern "C" fn gittins_learner_update(
    learner: *mut GittinsLearner,
    table: usize,
    state: usize,
    reward: f64,
    next_state: usize,
    passive_tables: *const usize,
    passive_states: *const usize,
    num_passive: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    counters: *mut GittinsCounters,
) -> GittinsStatus {
    guard(|| {
        if learner.is_null() || (num_passive > 0 && (passive_tables.is_null() || passive_states.is_null())) {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        let l = &mut *learner;
        let (n, t) = (l.inner.num_states(), l.inner.num_tables());
        let passive: Vec<(usize, usize)> = if num_passive == 0 {
            Vec::new()
        } else {
            let ts = std::slice::from_raw_parts(passive_tables, num_passive);
            let ss = std::slice::from_raw_parts(passive_states, num_passive);
            ts.iter().copied().zip(ss.iter().copied()).collect()
        };
        if table >= t || state >= n || next_state >= n || passive.iter().any(|&(pt, ps)| pt >= t || ps >= n) {
            return fail(GittinsStatus::OutOfRange, format!("table or state outside {t} x {n}"));
        }
        if !(reward.is_finite() && alpha.is_finite() && beta.is_finite() && gamma > 0.0 && gamma < 1.0) {
            return fail(GittinsStatus::InvalidInput, "reward and rates must be finite, gamma in (0,1)");
        }
        let pull = Pull {
            table,
            state,
            reward,
            next_state,
        };
        let c = l.inner.update(&pull, &passive, alpha, beta, gamma);
        l.counters.q_updates += c.q_updates;
        l.counters.index_updates += c.index_updates;
        l.counters.steps += c.steps;
        if !counters.is_null() {
            *counters = l.counters;
        }
        GittinsStatus::Ok
    })
}

/// Current index estimate for `(table, state)`.
///
/// # Safety
/// `learner` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gittins_learner_index(
    learner: *const GittinsLearner,
    table: usize,
    state: usize,
    gamma: f64,
    out: *mut f64,
) -> GittinsStatus {
    guard(|| {
        if learner.is_null() || out.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        let l = &(*learner).inner;
        if table >= l.num_tables() || state >= l.num_states() {
            return fail(GittinsStatus::OutOfRange, "table or state out of range");
        }
        *out = l.index(table, state, gamma);
        GittinsStatus::Ok
    })
}

/// # Safety
/// `learner` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gittins_learner_tracked_entries(learner: *const GittinsLearner, out: *mut usize) -> GittinsStatus {
    guard(|| {
        if learner.is_null() || out.is_null() {
            return fail(GittinsStatus::NullPointer, "null argument");
        }
        *out = (*learner).inner.tracked_entries();
        GittinsStatus::Ok
    })
}

/// # Safety
/// `learner` must be null or a live learner handle.
#[no_mangle]
pub unsafe extern "C" fn gittins_learner_free(learner: *mut GittinsLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}
