//! Exercises the C ABI exactly as a foreign caller would: through the
//! exported extern "C" functions, opaque handles and status codes.

use std::ffi::{CStr, CString};
use std::ptr;

use decoyforge_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0i8; 256];
    let n = unsafe { df_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&b| b as u8).collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(df_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn builtin_scenario_sweep_roundtrip() {
    let name = CString::new("bb84_wcs").unwrap();
    let mut scenario: *mut DfScenario = ptr::null_mut();
    let status = unsafe { df_scenario_builtin(name.as_ptr(), &mut scenario) };
    assert_eq!(status, DfStatus::Ok);
    assert!(!scenario.is_null());
    assert_eq!(unsafe { df_scenario_set_seed(scenario, 42) }, DfStatus::Ok);

    let mut sweep: *mut DfSweep = ptr::null_mut();
    assert_eq!(unsafe { df_sweep_run(scenario, &mut sweep) }, DfStatus::Ok);
    let len = unsafe { df_sweep_len(sweep) };
    assert_eq!(len, 31);

    let mut point = DfSweepPoint::default();
    assert_eq!(
        unsafe { df_sweep_point(sweep, 0, &mut point) },
        DfStatus::Ok
    );
    assert_eq!(point.loss_db, 0.0);
    assert!(point.r4 > 0.0 && point.r_inf >= point.r4);
    assert!(point.s_lower_4 > 0.0 && point.e_upper_4 < point.e_upper_3);

    assert_eq!(
        unsafe { df_sweep_point(sweep, len, &mut point) },
        DfStatus::IndexOutOfRange
    );
    assert!(last_error().contains("out of range"));

    unsafe {
        df_sweep_free(sweep);
        df_scenario_free(scenario);
    }
}

#[test]
fn unknown_scenario_reports_status_and_message() {
    let name = CString::new("nope").unwrap();
    let mut scenario: *mut DfScenario = ptr::null_mut();
    let status = unsafe { df_scenario_builtin(name.as_ptr(), &mut scenario) };
    assert_eq!(status, DfStatus::UnknownScenario);
    assert!(last_error().contains("nope"));
    assert!(scenario.is_null());
}

#[test]
fn null_pointers_are_rejected_not_dereferenced() {
    let mut scenario: *mut DfScenario = ptr::null_mut();
    assert_eq!(
        unsafe { df_scenario_builtin(ptr::null(), &mut scenario) },
        DfStatus::NullPointer
    );
    assert_eq!(
        unsafe { df_scenario_builtin(CString::new("bb84_wcs").unwrap().as_ptr(), ptr::null_mut()) },
        DfStatus::NullPointer
    );
    let mut sweep: *mut DfSweep = ptr::null_mut();
    assert_eq!(
        unsafe { df_sweep_run(ptr::null(), &mut sweep) },
        DfStatus::NullPointer
    );
    assert_eq!(unsafe { df_sweep_len(ptr::null()) }, 0);
    unsafe {
        df_scenario_free(ptr::null_mut());
        df_sweep_free(ptr::null_mut());
    }
}

#[test]
fn scenario_file_and_run_to_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("tiny.cfg");
    std::fs::write(
        &config_path,
        "protocol = bb84\nsource = wcs\nloss_db = 10\n",
    )
    .unwrap();

    let c_path = CString::new(config_path.to_str().unwrap()).unwrap();
    let mut scenario: *mut DfScenario = ptr::null_mut();
    assert_eq!(
        unsafe { df_scenario_from_file(c_path.as_ptr(), &mut scenario) },
        DfStatus::Ok
    );

    let out_dir = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { df_run_to_dir(scenario, out_dir.as_ptr()) },
        DfStatus::Ok
    );
    assert!(dir.path().join("out/manifest.json").exists());
    assert!(dir.path().join("out/fig3.csv").exists());
    unsafe { df_scenario_free(scenario) };
}

#[test]
fn oracle_certification_through_the_abi() {
    let mut summary = DfOracleSummary::default();
    let status = unsafe { df_oracle_certify(1, 0, 50, 7, &mut summary) };
    assert_eq!(status, DfStatus::Ok);
    assert_eq!(summary.trials, 50);
    assert_eq!(summary.violations, 0);
    assert_eq!(summary.precondition_failures, 0);

    assert_eq!(
        unsafe { df_oracle_certify(9, 0, 1, 7, &mut summary) },
        DfStatus::InvalidArgument
    );
}

#[test]
fn entropy_export_matches_library() {
    let h = df_binary_entropy(0.5);
    assert!((h - 1.0).abs() < 1e-15);
    assert_eq!(df_binary_entropy(0.0), 0.0);
}

#[test]
fn committed_header_covers_every_export() {
    // The header is committed (the build environment has no cbindgen); this
    // keeps it honest against the exported surface.
    let header = include_str!("../include/decoyforge.h");
    for symbol in [
        "df_version",
        "df_last_error_message",
        "df_scenario_builtin",
        "df_scenario_from_file",
        "df_scenario_set_seed",
        "df_scenario_free",
        "df_sweep_run",
        "df_sweep_len",
        "df_sweep_point",
        "df_sweep_free",
        "df_run_to_dir",
        "df_oracle_certify",
        "df_binary_entropy",
    ] {
        assert!(header.contains(symbol), "header is missing {symbol}");
    }
    for type_name in [
        "DfStatus",
        "DfScenario",
        "DfSweep",
        "DfSweepPoint",
        "DfOracleSummary",
    ] {
        assert!(header.contains(type_name), "header is missing {type_name}");
    }
    // Field layout of the POD structs matches the Rust definitions.
    for field in [
        "double loss_db",
        "double mu_opt_3",
        "double r3",
        "double mu_opt_4",
        "double r4",
        "double mu_opt_inf",
        "double r_inf",
        "double s_lower_3",
        "double s_lower_4",
        "double e_upper_3",
        "double e_upper_4",
        "double s_true",
        "double e_true",
        "size_t flag_count",
        "uint64_t trials",
        "uint64_t violations",
        "uint64_t precondition_failures",
        "double max_gap",
    ] {
        assert!(header.contains(field), "header is missing field `{field}`");
    }
}
