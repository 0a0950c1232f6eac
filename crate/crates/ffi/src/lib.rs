//! C ABI for the engine.
//!
//! Every function returns a [`WcaStatus`]; on failure the message is kept per
//! thread and read with [`wca_last_error`]. Handles are opaque and owned by
//! the caller until passed to the matching `_free`. Strings returned through
//! out-pointers must be released with [`wca_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use whitebox_ca::engine::Simulation;
use whitebox_ca::lattice::{Boundary, Coord, Geometry, GridKind, Lattice, StateId};
use whitebox_ca::models::game_of_life_ruleset;
use whitebox_ca::rules::{parse_ruleset, RuleSet};
use whitebox_ca::trace::{explain, write_trace, TraceMode};
use whitebox_ca::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcaStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Runtime = 3,
    Unsupported = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

pub const WCA_TRACE_OFF: u32 = 0;
pub const WCA_TRACE_RULES_ONLY: u32 = 1;
pub const WCA_TRACE_FULL: u32 = 2;

/// Passed as `fixed_state` for a periodic boundary.
pub const WCA_PERIODIC: i32 = -1;

pub struct WcaRuleSet(Arc<RuleSet>);

pub struct WcaLattice(Lattice);

pub struct WcaSimulation {
    initial: Lattice,
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: WcaStatus, msg: impl Into<String>) -> WcaStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> WcaStatus {
    let status = match e.exit_code() {
        2 => WcaStatus::Config,
        4 => WcaStatus::Unsupported,
        _ => WcaStatus::Runtime,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> WcaStatus) -> WcaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(WcaStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(WcaStatus::NullPointer, concat!("'", stringify!($p), "' is null"));
        })+
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_error(e),
        }
    };
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, WcaStatus> {
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(WcaStatus::InvalidUtf8, format!("'{name}' is not UTF-8: {e}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> WcaStatus {
    *out = Box::into_raw(Box::new(value));
    WcaStatus::Ok
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> WcaStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            WcaStatus::Ok
        }
        Err(_) => fail(WcaStatus::Runtime, "string contains a nul byte"),
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn wca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn wca_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wca_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_ruleset_parse(text: *const c_char, out: *mut *mut WcaRuleSet) -> WcaStatus {
    guard(|| {
        non_null!(text, out);
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        put(out, WcaRuleSet(Arc::new(tri!(parse_ruleset(text)))))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_ruleset_life(out: *mut *mut WcaRuleSet) -> WcaStatus {
    guard(|| {
        non_null!(out);
        put(out, WcaRuleSet(Arc::new(game_of_life_ruleset())))
    })
}

/// # Safety
/// `rules` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wca_ruleset_free(rules: *mut WcaRuleSet) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// # Safety
/// `rules` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_ruleset_state_count(rules: *const WcaRuleSet, out: *mut u32) -> WcaStatus {
    guard(|| {
        non_null!(rules, out);
        *out = (*rules).0.states().len() as u32;
        WcaStatus::Ok
    })
}

/// # Safety
/// `rules` must be a live handle, `name` a nul-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wca_ruleset_state_id(
    rules: *const WcaRuleSet,
    name: *const c_char,
    out: *mut u8,
) -> WcaStatus {
    guard(|| {
        non_null!(rules, name, out);
        let name = match str_arg(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        match (*rules).0.states().id(name) {
            Some(id) => {
                *out = id.0;
                WcaStatus::Ok
            }
            None => fail(WcaStatus::Config, format!("unknown state '{name}'")),
        }
    })
}

/// Canonical `.car` text. Free with `wca_string_free`.
///
/// # Safety
/// `rules` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_ruleset_to_text(rules: *const WcaRuleSet, out: *mut *mut c_char) -> WcaStatus {
    guard(|| {
        non_null!(rules, out);
        put_string(out, (*rules).0.to_text())
    })
}

/// A lattice filled with `fill`. `fixed_state` is a state id for a fixed
/// boundary or `WCA_PERIODIC`.
///
/// # Safety
/// `rules` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_lattice_new(
    rules: *const WcaRuleSet,
    width: u32,
    height: u32,
    hex: bool,
    fixed_state: i32,
    fill: u8,
    out: *mut *mut WcaLattice,
) -> WcaStatus {
    guard(|| {
        non_null!(rules, out);
        let kind = if hex { GridKind::Hex } else { GridKind::Square };
        let geometry = tri!(Geometry::new(kind, width as usize, height as usize));
        let boundary = match fixed_state {
            WCA_PERIODIC => Boundary::Periodic,
            s if (0..=255).contains(&s) => Boundary::Fixed(StateId(s as u8)),
            s => return fail(WcaStatus::Config, format!("invalid fixed boundary state {s}")),
        };
        let states = Arc::clone((*rules).0.states());
        put(out, WcaLattice(tri!(Lattice::filled(geometry, boundary, states, StateId(fill)))))
    })
}

/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wca_lattice_free(lattice: *mut WcaLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// # Safety
/// `lattice` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wca_lattice_set(lattice: *mut WcaLattice, row: u32, col: u32, state: u8) -> WcaStatus {
    guard(|| {
        non_null!(lattice);
        tri!((*lattice).0.set(Coord::new(row as i64, col as i64), StateId(state)));
        WcaStatus::Ok
    })
}

/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_lattice_get(lattice: *const WcaLattice, row: u32, col: u32, out: *mut u8) -> WcaStatus {
    guard(|| {
        non_null!(lattice, out);
        let c = Coord::new(row as i64, col as i64);
        match (*lattice).0.get(c) {
            Some(s) => {
                *out = s.0;
                WcaStatus::Ok
            }
            None => fail(WcaStatus::Config, format!("cell {c} is outside the lattice")),
        }
    })
}

/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_lattice_count(lattice: *const WcaLattice, state: u8, out: *mut u64) -> WcaStatus {
    guard(|| {
        non_null!(lattice, out);
        *out = (*lattice).0.count(StateId(state)) as u64;
        WcaStatus::Ok
    })
}

/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_lattice_digest(lattice: *const WcaLattice, out: *mut u64) -> WcaStatus {
    guard(|| {
        non_null!(lattice, out);
        *out = (*lattice).0.digest();
        WcaStatus::Ok
    })
}

/// Snapshot text of the lattice. Free with `wca_string_free`.
///
/// # Safety
/// `lattice` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_lattice_to_text(lattice: *const WcaLattice, out: *mut *mut c_char) -> WcaStatus {
    guard(|| {
        non_null!(lattice, out);
        put_string(out, (*lattice).0.to_snapshot_text())
    })
}

/// Starts a simulation from a copy of `initial`. `workers` 0 means one.
///
/// # Safety
/// `rules` and `initial` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_simulation_new(
    rules: *const WcaRuleSet,
    initial: *const WcaLattice,
    trace_mode: u32,
    workers: u32,
    out: *mut *mut WcaSimulation,
) -> WcaStatus {
    guard(|| {
        non_null!(rules, initial, out);
        let mode = match trace_mode {
            WCA_TRACE_OFF => TraceMode::Off,
            WCA_TRACE_RULES_ONLY => TraceMode::RulesOnly,
            WCA_TRACE_FULL => TraceMode::Full,
            m => return fail(WcaStatus::Config, format!("unknown trace mode {m}")),
        };
        let initial = (*initial).0.clone();
        let sim = tri!(Simulation::new(
            Arc::clone(&(*rules).0),
            initial.clone(),
            mode,
            workers.max(1) as usize
        ));
        put(out, WcaSimulation { initial, sim })
    })
}

/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wca_simulation_free(sim: *mut WcaSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wca_simulation_step(sim: *mut WcaSimulation, iterations: u32) -> WcaStatus {
    guard(|| {
        non_null!(sim);
        for _ in 0..iterations {
            (*sim).sim.step();
        }
        WcaStatus::Ok
    })
}

/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_simulation_iteration(sim: *const WcaSimulation, out: *mut u32) -> WcaStatus {
    guard(|| {
        non_null!(sim, out);
        *out = (*sim).sim.iteration();
        WcaStatus::Ok
    })
}

/// Copy of the current generation, a new handle.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_simulation_lattice(sim: *const WcaSimulation, out: *mut *mut WcaLattice) -> WcaStatus {
    guard(|| {
        non_null!(sim, out);
        put(out, WcaLattice((*sim).sim.lattice().clone()))
    })
}

/// Trace text so far. Free with `wca_string_free`.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_simulation_trace(sim: *const WcaSimulation, out: *mut *mut c_char) -> WcaStatus {
    guard(|| {
        non_null!(sim, out);
        put_string(out, write_trace((*sim).sim.trace()))
    })
}

/// Causal chain of `(row, col)` at `iteration` as JSON. Needs a full trace.
/// Free with `wca_string_free`.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wca_simulation_explain(
    sim: *const WcaSimulation,
    row: u32,
    col: u32,
    iteration: u32,
    depth: u32,
    out: *mut *mut c_char,
) -> WcaStatus {
    guard(|| {
        non_null!(sim, out);
        let s = &*sim;
        let chain = tri!(explain(
            &s.initial,
            s.sim.trace(),
            Coord::new(row as i64, col as i64),
            iteration,
            depth
        ));
        put_string(out, chain.to_json().to_string())
    })
}
