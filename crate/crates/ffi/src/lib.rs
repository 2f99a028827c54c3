//! C ABI over `fks-core`.
//!
//! Every function returns an [`FksStatus`]; on failure the message is
//! available from [`fks_last_error`] on the same thread. Simulations live
//! behind the opaque [`FksSimulation`] handle. Strings returned through
//! `char **` out-parameters are owned by the caller and released with
//! [`fks_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fks_core::blowup::{self, Classification, ClassifyCriteria};
use fks_core::cli::{self, RunConfig, RunOutput, Suite};
use fks_core::diagnostics::CSV_HEADER;
use fks_core::integrator::Termination;
use fks_core::Error;

/// Status codes. Values 1 and 3 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FksStatus {
    Ok = 0,
    InvalidInput = 1,
    Io = 3,
    NullPointer = 4,
    /// The simulation has not been run yet.
    NotRun = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// How a run ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FksTermination {
    ReachedTEnd = 0,
    BlowupEvent = 1,
    MaxSteps = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FksClassification {
    Singular = 0,
    Bounded = 1,
    Inconclusive = 2,
}

/// Blow-up ansatz `y = a1 (a2 - t)^(-a3)` fitted to a series. The
/// parameters are NaN when no fit was possible.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FksFit {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub rms_residual: f64,
    pub growth: f64,
    pub classification: FksClassification,
}

/// Opaque simulation handle.
pub struct FksSimulation {
    config: RunConfig,
    output: Option<RunOutput>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> FksStatus {
    match err {
        Error::Io { .. } => FksStatus::Io,
        _ => FksStatus::InvalidInput,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), FksStatus>) -> FksStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FksStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            FksStatus::Panic
        }
    }
}

fn fail(err: Error) -> FksStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn null(what: &str) -> FksStatus {
    set_error(format!("{what} is null"));
    FksStatus::NullPointer
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, FksStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FksStatus::InvalidInput
    })
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), FksStatus> {
    let c = CString::new(s).map_err(|_| {
        set_error("output contains NUL");
        FksStatus::InvalidInput
    })?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

unsafe fn sim_ref<'a>(sim: *const FksSimulation) -> Result<&'a FksSimulation, FksStatus> {
    sim.as_ref().ok_or_else(|| null("simulation"))
}

unsafe fn output_ref<'a>(sim: *const FksSimulation) -> Result<&'a RunOutput, FksStatus> {
    sim_ref(sim)?.output.as_ref().ok_or_else(|| {
        set_error("simulation has not been run");
        FksStatus::NotRun
    })
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fks_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fks_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a simulation from `key = value` configuration text (the same
/// keys as the command-line config file).
///
/// # Safety
/// `config` must be a NUL-terminated string or NULL; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fks_simulation_new(
    config: *const c_char,
    out: *mut *mut FksSimulation,
) -> FksStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(config, "config")?;
        let kv = cli::parse_kv(text).map_err(fail)?;
        let config = RunConfig::from_kv(&kv).map_err(fail)?;
        config.validate().map_err(fail)?;
        *out = Box::into_raw(Box::new(FksSimulation {
            config,
            output: None,
        }));
        Ok(())
    })
}

/// Release a simulation. NULL is ignored.
///
/// # Safety
/// `sim` must come from [`fks_simulation_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fks_simulation_free(sim: *mut FksSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Integrate to `t_end` in memory (no files are written). Running again
/// replaces the previous result.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fks_simulation_run(sim: *mut FksSimulation) -> FksStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("simulation"))?;
        sim.output = Some(cli::run(&sim.config, None).map_err(fail)?);
        Ok(())
    })
}

/// Grid size `n`.
///
/// # Safety
/// `sim` must be a live handle and `n` valid.
#[no_mangle]
pub unsafe extern "C" fn fks_simulation_grid_size(
    sim: *const FksSimulation,
    n: *mut usize,
) -> FksStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let n = n.as_mut().ok_or_else(|| null("n"))?;
        *n = s.config.n;
        Ok(())
    })
}

/// Final time and termination reason of the last run.
///
/// # Safety
/// `sim` must be a live handle; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fks_simulation_result(
    sim: *const FksSimulation,
    t_final: *mut f64,
    termination: *mut FksTermination,
) -> FksStatus {
    guard(|| {
        let out = output_ref(sim)?;
        let t = t_final.as_mut().ok_or_else(|| null("t_final"))?;
        let term = termination.as_mut().ok_or_else(|| null("termination"))?;
        *t = out.final_state.t;
        *term = match out.termination {
            Termination::ReachedTEnd => FksTermination::ReachedTEnd,
            Termination::BlowupEvent => FksTermination::BlowupEvent,
            Termination::MaxSteps => FksTermination::MaxSteps,
        };
        Ok(())
    })
}

/// Copy the final `u` and `v` grid values into buffers of `len >= n`
/// doubles. Either buffer may be NULL to skip it.
///
/// # Safety
/// Non-NULL buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fks_simulation_fields(
    sim: *const FksSimulation,
    u: *mut f64,
    v: *mut f64,
    len: usize,
) -> FksStatus {
    guard(|| {
        let out = output_ref(sim)?;
        let n = out.final_state.u.values().len();
        if len < n {
            set_error(format!("buffer holds {len} values, need {n}"));
            return Err(FksStatus::BufferTooSmall);
        }
        for (dst, src) in [
            (u, out.final_state.u.values()),
            (v, out.final_state.v.values()),
        ] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
            }
        }
        Ok(())
    })
}

/// Number of diagnostic columns per record (see [`fks_diagnostics_column`]).
#[no_mangle]
pub extern "C" fn fks_diagnostics_columns() -> usize {
    CSV_HEADER.len()
}

/// Name of diagnostic column `i` as a static string, or NULL.
#[no_mangle]
pub extern "C" fn fks_diagnostics_column(i: usize) -> *const c_char {
    const NAMES: [&str; 12] = [
        "t\0",
        "l1_u\0",
        "l2_u\0",
        "linf_u\0",
        "linf_dxu\0",
        "linf_lbeta_v\0",
        "wiener_u_1\0",
        "wiener_v_beta\0",
        "energy_wiener\0",
        "min_u\0",
        "min_v\0",
        "cont_integral\0",
    ];
    NAMES.get(i).map_or(ptr::null(), |s| s.as_ptr().cast())
}

/// Copy the diagnostics of the last run, row-major with
/// [`fks_diagnostics_columns`] values per accepted step. With `out` NULL
/// only `rows` is set.
///
/// # Safety
/// `rows` must be valid; a non-NULL `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn fks_simulation_diagnostics(
    sim: *const FksSimulation,
    out: *mut f64,
    capacity: usize,
    rows: *mut usize,
) -> FksStatus {
    guard(|| {
        let run = output_ref(sim)?;
        let rows = rows.as_mut().ok_or_else(|| null("rows"))?;
        *rows = run.records.len();
        if out.is_null() {
            return Ok(());
        }
        let cols = CSV_HEADER.len();
        let need = run.records.len() * cols;
        if capacity < need {
            set_error(format!("buffer holds {capacity} values, need {need}"));
            return Err(FksStatus::BufferTooSmall);
        }
        for (i, r) in run.records.iter().enumerate() {
            let row = r.csv_row();
            ptr::copy_nonoverlapping(row.as_ptr(), out.add(i * cols), cols);
        }
        Ok(())
    })
}

/// Fit and classify a `(t, y)` series. `bounded_run` says the run reached
/// its end time without a blow-up event.
///
/// # Safety
/// `t` and `y` must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fks_fit_blowup(
    t: *const f64,
    y: *const f64,
    len: usize,
    bounded_run: bool,
    out: *mut FksFit,
) -> FksStatus {
    guard(|| {
        if t.is_null() || y.is_null() {
            return Err(null("series"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (t, y) = (
            std::slice::from_raw_parts(t, len),
            std::slice::from_raw_parts(y, len),
        );
        let series: Vec<(f64, f64)> = t.iter().copied().zip(y.iter().copied()).collect();
        let report = blowup::classify(&series, bounded_run, &ClassifyCriteria::default());
        let fit = report.fit.as_ref();
        *out = FksFit {
            a1: fit.map_or(f64::NAN, |f| f.a1),
            a2: fit.map_or(f64::NAN, |f| f.a2),
            a3: fit.map_or(f64::NAN, |f| f.a3),
            rms_residual: fit.map_or(f64::NAN, |f| f.rms_residual),
            growth: report.growth.unwrap_or(f64::NAN),
            classification: match report.classification {
                Classification::Singular => FksClassification::Singular,
                Classification::Bounded => FksClassification::Bounded,
                Classification::Inconclusive => FksClassification::Inconclusive,
            },
        };
        Ok(())
    })
}

/// Constants report as JSON for `key = value` parameter text.
///
/// # Safety
/// `params` must be a NUL-terminated string; `out` must be valid. Free the
/// result with [`fks_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fks_constants_json(
    params: *const c_char,
    out: *mut *mut c_char,
) -> FksStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kv = cli::parse_kv(read_str(params, "params")?).map_err(fail)?;
        let report = cli::constants_from_kv(&kv).map_err(fail)?;
        let json = serde_json::to_string(&report).map_err(|e| fail(e.into()))?;
        give_string(json, out)
    })
}

/// Run verification suites (comma-separated names or `all`) and return the
/// JSON report. `passed` is set to whether no suite failed.
///
/// # Safety
/// `suites` must be a NUL-terminated string; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fks_verify_json(
    suites: *const c_char,
    passed: *mut bool,
    out: *mut *mut c_char,
) -> FksStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let passed = passed.as_mut().ok_or_else(|| null("passed"))?;
        let text = read_str(suites, "suites")?;
        let list = if text.trim() == "all" {
            Suite::ALL.to_vec()
        } else {
            text.split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<Vec<Suite>, _>>()
                .map_err(fail)?
        };
        let report = cli::verify(&list, None).map_err(fail)?;
        *passed = report.passed;
        let json = serde_json::to_string(&report).map_err(|e| fail(e.into()))?;
        give_string(json, out)
    })
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fks_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
