//! C ABI for the decoyforge library.
//!
//! Scenarios and sweep results are opaque handles created and destroyed
//! here; all functions return a [`DfStatus`] code and record a descriptive
//! message retrievable with [`df_last_error_message`]. The committed header
//! lives at `include/decoyforge.h` (regenerate with cbindgen, see README).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use decoyforge::cli::run_scenario_to_dir;
use decoyforge::error::Error;
use decoyforge::oracle;
use decoyforge::protocol::{sweep, ProtocolKind, ScenarioConfig, SourceFamily, SweepResult};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    UnknownScenario = 4,
    ConditionViolated = 5,
    NumericFailure = 6,
    IoFailure = 7,
    OracleViolations = 8,
    IndexOutOfRange = 9,
    Panic = 10,
}

/// Opaque scenario configuration handle.
pub struct DfScenario(ScenarioConfig);

/// Opaque sweep result handle.
pub struct DfSweep(SweepResult);

/// One loss-grid record, plain-old-data for easy binding.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DfSweepPoint {
    pub loss_db: f64,
    pub mu_opt_3: f64,
    pub r3: f64,
    pub mu_opt_4: f64,
    pub r4: f64,
    pub mu_opt_inf: f64,
    pub r_inf: f64,
    pub s_lower_3: f64,
    pub s_lower_4: f64,
    pub e_upper_3: f64,
    pub e_upper_4: f64,
    pub s_true: f64,
    pub e_true: f64,
    pub flag_count: usize,
}

/// Aggregate oracle outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DfOracleSummary {
    pub trials: u64,
    pub violations: u64,
    pub precondition_failures: u64,
    pub max_gap: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: DfStatus, message: &str) -> DfStatus {
    set_last_error(message);
    status
}

fn status_of(err: &Error) -> DfStatus {
    match err {
        Error::InvalidParameter(_) | Error::Config { .. } | Error::Infeasible(_) => {
            DfStatus::InvalidArgument
        }
        Error::UnknownScenario(_) => DfStatus::UnknownScenario,
        Error::ConditionViolated(_) => DfStatus::ConditionViolated,
        Error::ZeroCoefficient(_)
        | Error::NonPositiveDenominator(_)
        | Error::UndefinedErrorRate(_) => DfStatus::NumericFailure,
        Error::Io(_) => DfStatus::IoFailure,
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, DfStatus> {
    if ptr.is_null() {
        return Err(fail(DfStatus::NullPointer, "null string pointer"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(DfStatus::InvalidUtf8, "string is not valid UTF-8"))
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn df_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message into `buf` (truncating) and return the full
/// message length in bytes, excluding the terminator. A zero-length buffer
/// simply reports the length.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be null with
/// `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn df_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Create a scenario from a built-in name (`bb84_wcs`, `bb84_hsps`,
/// `mdi_wcs`, `mdi_hsps`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer; on
/// success `*out` owns the handle until [`df_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn df_scenario_builtin(
    name: *const c_char,
    out: *mut *mut DfScenario,
) -> DfStatus {
    if out.is_null() {
        return fail(DfStatus::NullPointer, "null output pointer");
    }
    let name = match cstr(name) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match decoyforge::protocol::builtin_scenario(name) {
        Some(config) => {
            *out = Box::into_raw(Box::new(DfScenario(config)));
            DfStatus::Ok
        }
        None => fail(
            DfStatus::UnknownScenario,
            &format!("unknown built-in scenario `{name}`"),
        ),
    }
}

/// Create a scenario from a config file (same grammar as the CLI).
///
/// # Safety
/// As for [`df_scenario_builtin`].
#[no_mangle]
pub unsafe extern "C" fn df_scenario_from_file(
    path: *const c_char,
    out: *mut *mut DfScenario,
) -> DfStatus {
    if out.is_null() {
        return fail(DfStatus::NullPointer, "null output pointer");
    }
    let path = match cstr(path) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match decoyforge::cli::load_scenario(path) {
        Ok(config) => {
            *out = Box::into_raw(Box::new(DfScenario(config)));
            DfStatus::Ok
        }
        Err(e) => fail(status_of(&e), &e.to_string()),
    }
}

/// # Safety
/// `scenario` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn df_scenario_set_seed(scenario: *mut DfScenario, seed: u64) -> DfStatus {
    let Some(s) = scenario.as_mut() else {
        return fail(DfStatus::NullPointer, "null scenario handle");
    };
    s.0.seed = seed;
    DfStatus::Ok
}

/// # Safety
/// `scenario` must be a handle from this library, not yet freed; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn df_scenario_free(scenario: *mut DfScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run the loss sweep for a scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` valid. On success `*out` owns the
/// sweep until [`df_sweep_free`].
#[no_mangle]
pub unsafe extern "C" fn df_sweep_run(
    scenario: *const DfScenario,
    out: *mut *mut DfSweep,
) -> DfStatus {
    if out.is_null() {
        return fail(DfStatus::NullPointer, "null output pointer");
    }
    let Some(s) = scenario.as_ref() else {
        return fail(DfStatus::NullPointer, "null scenario handle");
    };
    let result = catch_unwind(AssertUnwindSafe(|| sweep(&s.0)));
    match result {
        Ok(Ok(r)) => {
            *out = Box::into_raw(Box::new(DfSweep(r)));
            DfStatus::Ok
        }
        Ok(Err(e)) => fail(status_of(&e), &e.to_string()),
        Err(_) => fail(DfStatus::Panic, "sweep panicked"),
    }
}

/// Number of loss-grid records in a sweep.
///
/// # Safety
/// `sweep` must be a live handle; null returns 0.
#[no_mangle]
pub unsafe extern "C" fn df_sweep_len(sweep: *const DfSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.points.len())
}

/// Copy record `index` into `out`.
///
/// # Safety
/// `sweep` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_sweep_point(
    sweep: *const DfSweep,
    index: usize,
    out: *mut DfSweepPoint,
) -> DfStatus {
    let Some(s) = sweep.as_ref() else {
        return fail(DfStatus::NullPointer, "null sweep handle");
    };
    if out.is_null() {
        return fail(DfStatus::NullPointer, "null output pointer");
    }
    let Some(p) = s.0.points.get(index) else {
        return fail(
            DfStatus::IndexOutOfRange,
            &format!("index {index} out of range ({} points)", s.0.points.len()),
        );
    };
    *out = DfSweepPoint {
        loss_db: p.loss_db,
        mu_opt_3: p.mu_opt_3,
        r3: p.r3,
        mu_opt_4: p.mu_opt_4,
        r4: p.r4,
        mu_opt_inf: p.mu_opt_inf,
        r_inf: p.r_inf,
        s_lower_3: p.s_lower_3,
        s_lower_4: p.s_lower_4,
        e_upper_3: p.e_upper_3,
        e_upper_4: p.e_upper_4,
        s_true: p.s_true,
        e_true: p.e_true,
        flag_count: p.flags.len(),
    };
    DfStatus::Ok
}

/// # Safety
/// `sweep` must be a handle from this library, not yet freed; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn df_sweep_free(sweep: *mut DfSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Run a scenario and write the figure CSVs, raw CSV and manifest into
/// `out_dir`, as the CLI `run` subcommand does.
///
/// # Safety
/// `scenario` must be a live handle; `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn df_run_to_dir(
    scenario: *const DfScenario,
    out_dir: *const c_char,
) -> DfStatus {
    let Some(s) = scenario.as_ref() else {
        return fail(DfStatus::NullPointer, "null scenario handle");
    };
    let dir = match cstr(out_dir) {
        Ok(d) => d,
        Err(status) => return status,
    };
    let result = catch_unwind(AssertUnwindSafe(|| {
        run_scenario_to_dir(&s.0, Path::new(dir))
    }));
    match result {
        Ok(Ok(_)) => DfStatus::Ok,
        Ok(Err(e)) => fail(status_of(&e), &e.to_string()),
        Err(_) => fail(DfStatus::Panic, "run panicked"),
    }
}

/// Certify the bounds with random truth tables: `protocol` 0 = BB84,
/// 1 = MDI; `source` 0 = WCS, 1 = HSPS, 2 = thermal. Returns
/// [`DfStatus::OracleViolations`] when the summary records violations.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn df_oracle_certify(
    protocol: i32,
    source: i32,
    trials: u64,
    seed: u64,
    out: *mut DfOracleSummary,
) -> DfStatus {
    if out.is_null() {
        return fail(DfStatus::NullPointer, "null output pointer");
    }
    let protocol = match protocol {
        0 => ProtocolKind::Bb84,
        1 => ProtocolKind::Mdi,
        other => {
            return fail(
                DfStatus::InvalidArgument,
                &format!("protocol code {other} not in {{0,1}}"),
            )
        }
    };
    let source = match source {
        0 => SourceFamily::Wcs,
        1 => SourceFamily::Hsps,
        2 => SourceFamily::Thermal,
        other => {
            return fail(
                DfStatus::InvalidArgument,
                &format!("source code {other} not in {{0,1,2}}"),
            )
        }
    };
    let result = catch_unwind(|| oracle::certify_bounds(protocol, source, trials, seed));
    match result {
        Ok(Ok(report)) => {
            *out = DfOracleSummary {
                trials: report.trials,
                violations: report.violations.len() as u64,
                precondition_failures: report.precondition_failures,
                max_gap: report.max_gap,
            };
            if report.violations.is_empty() {
                DfStatus::Ok
            } else {
                fail(
                    DfStatus::OracleViolations,
                    &format!("{} bound violations", report.violations.len()),
                )
            }
        }
        Ok(Err(e)) => fail(status_of(&e), &e.to_string()),
        Err(_) => fail(DfStatus::Panic, "oracle panicked"),
    }
}

/// Binary Shannon entropy, exported for sanity checks from bindings.
#[no_mangle]
pub extern "C" fn df_binary_entropy(p: f64) -> f64 {
    decoyforge::bounds_bb84::binary_entropy(p)
}
