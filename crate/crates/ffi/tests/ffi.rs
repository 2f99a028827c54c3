use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use fks_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = fks_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn new_sim(config: &str) -> *mut FksSimulation {
    let mut sim = ptr::null_mut();
    let status = unsafe { fks_simulation_new(cstr(config).as_ptr(), &mut sim) };
    assert_eq!(status, FksStatus::Ok, "{}", last_error());
    sim
}

#[test]
fn steady_state_round_trip() {
    let sim =
        new_sim("scenario = custom\nu_modes = 0:1\nv_modes = 0:1\nchi = 20\nn = 64\nt_end = 2");
    unsafe {
        let mut t = 0.0;
        let mut term = FksTermination::MaxSteps;
        assert_eq!(
            fks_simulation_result(sim, &mut t, &mut term),
            FksStatus::NotRun
        );

        assert_eq!(fks_simulation_run(sim), FksStatus::Ok);
        assert_eq!(fks_simulation_result(sim, &mut t, &mut term), FksStatus::Ok);
        assert_eq!(t, 2.0);
        assert_eq!(term, FksTermination::ReachedTEnd);

        let mut n = 0;
        assert_eq!(fks_simulation_grid_size(sim, &mut n), FksStatus::Ok);
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        assert_eq!(
            fks_simulation_fields(sim, u.as_mut_ptr(), v.as_mut_ptr(), n),
            FksStatus::Ok
        );
        assert!(u.iter().chain(&v).all(|&x| (x - 1.0).abs() < 1e-12));
        assert_eq!(
            fks_simulation_fields(sim, u.as_mut_ptr(), ptr::null_mut(), n - 1),
            FksStatus::BufferTooSmall
        );

        let mut rows = 0;
        assert_eq!(
            fks_simulation_diagnostics(sim, ptr::null_mut(), 0, &mut rows),
            FksStatus::Ok
        );
        assert!(rows >= 2);
        let cols = fks_diagnostics_columns();
        let mut buf = vec![0.0; rows * cols];
        assert_eq!(
            fks_simulation_diagnostics(sim, buf.as_mut_ptr(), buf.len(), &mut rows),
            FksStatus::Ok
        );
        assert_eq!(buf[0], 0.0);
        assert_eq!(buf[(rows - 1) * cols], 2.0);
        fks_simulation_free(sim);
    }
}

#[test]
fn bad_config_reports_error() {
    let mut sim = ptr::null_mut();
    let status = unsafe { fks_simulation_new(cstr("alpah = 1").as_ptr(), &mut sim) };
    assert_eq!(status, FksStatus::InvalidInput);
    assert!(sim.is_null());
    assert!(last_error().contains("alpah"));

    let status = unsafe { fks_simulation_new(ptr::null(), &mut sim) };
    assert_eq!(status, FksStatus::NullPointer);
    unsafe { fks_simulation_free(ptr::null_mut()) };
}

#[test]
fn fit_recovers_exact_model() {
    let (a1, a2, a3) = (0.5, 1.0, 1.5);
    let t: Vec<f64> = (0..200).map(|i| 0.9 * i as f64 / 199.0).collect();
    let y: Vec<f64> = t.iter().map(|&t| a1 * (a2 - t).powf(-a3)).collect();
    let mut fit = FksFit {
        a1: 0.0,
        a2: 0.0,
        a3: 0.0,
        rms_residual: 0.0,
        growth: 0.0,
        classification: FksClassification::Inconclusive,
    };
    let status = unsafe { fks_fit_blowup(t.as_ptr(), y.as_ptr(), t.len(), false, &mut fit) };
    assert_eq!(status, FksStatus::Ok);
    assert!((fit.a1 - a1).abs() < 1e-6 && (fit.a2 - a2).abs() < 1e-6 && (fit.a3 - a3).abs() < 1e-6);
    assert!(fit.rms_residual < 1e-8);
}

#[test]
fn constants_json_flags_placeholders() {
    let mut out = ptr::null_mut();
    let status = unsafe { fks_constants_json(cstr("alpha = 2\nbeta = 2").as_ptr(), &mut out) };
    assert_eq!(status, FksStatus::Ok, "{}", last_error());
    let json: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    assert_eq!(json["placeholder_constants"], true);
    unsafe { fks_string_free(out) };
}

#[test]
fn verify_symbols() {
    let mut out = ptr::null_mut();
    let mut passed = false;
    let status = unsafe { fks_verify_json(cstr("symbols").as_ptr(), &mut passed, &mut out) };
    assert_eq!(status, FksStatus::Ok);
    assert!(passed);
    unsafe { fks_string_free(out) };

    let status = unsafe { fks_verify_json(cstr("nope").as_ptr(), &mut passed, &mut out) };
    assert_eq!(status, FksStatus::InvalidInput);
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(fks_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// The generated header must be valid C.
#[test]
fn header_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fks.h");
    assert!(header.exists());
    let dir = tempfile_dir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ FksSimulation *s = 0; return fks_simulation_run(s) == FKS_STATUS_OK; }}\n",
            header.display()
        ),
    )
    .unwrap();
    match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        ),
        Err(_) => eprintln!("no C compiler; header check skipped"),
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("fks-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
