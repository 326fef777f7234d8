use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use stokes_lab_ffi::*;

fn cx(re: f64, im: f64) -> StokesComplex {
    StokesComplex { re, im }
}

fn last_error() -> String {
    let p = stokes_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn entries(m: *const StokesMatrix) -> Vec<StokesComplex> {
    let n = unsafe { stokes_matrix_dim(m) };
    let mut buf = vec![cx(0.0, 0.0); n * n];
    assert_eq!(unsafe { stokes_matrix_copy(m, buf.as_mut_ptr(), buf.len()) }, StokesStatus::Ok);
    buf
}

#[test]
fn classical_zero_matrix_gives_identity() {
    let a = [cx(0.0, 0.0); 9];
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { stokes_classical_plus(a.as_ptr(), 3, &mut out) }, StokesStatus::Ok);
    assert_eq!(unsafe { stokes_matrix_dim(out) }, 3);
    for (k, z) in entries(out).iter().enumerate() {
        assert_eq!(*z, cx(if k % 4 == 0 { 1.0 } else { 0.0 }, 0.0));
    }
    unsafe { stokes_matrix_free(out) };
}

#[test]
fn quantum_closed_matches_numeric() {
    let w = [1i64, 0, 0];
    let (mut closed, mut num) = (ptr::null_mut(), ptr::null_mut());
    let mut info = StokesNumericInfo::default();
    unsafe {
        assert_eq!(stokes_quantum_plus(w.as_ptr(), 3, 1.0, &mut closed), StokesStatus::Ok);
        assert_eq!(stokes_quantum_numeric(w.as_ptr(), 3, 1.0, 0.0, &mut num, &mut info), StokesStatus::Ok);
        assert_eq!(stokes_matrix_dim(closed), 9);
        let mut d = 1.0;
        assert_eq!(stokes_matrix_max_diff(closed, num, &mut d), StokesStatus::Ok);
        assert!(d < 1e-5, "{d}");
        assert!(info.disc_err <= 10.0 * info.ode_tol);
        assert_eq!(info.anchor_radius, 25.0);
        stokes_matrix_free(closed);
        stokes_matrix_free(num);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut out = ptr::null_mut();
    let w = [1i64, 0];
    assert_eq!(unsafe { stokes_quantum_plus(w.as_ptr(), 2, 0.0, &mut out) }, StokesStatus::Config);
    assert!(out.is_null());
    assert!(last_error().starts_with("zero_h"));
    // resonant: eigenvalues 0 and 2πi
    let a = [cx(0.0, 0.0), cx(0.0, 0.0), cx(0.3, 0.0), cx(0.0, 2.0 * std::f64::consts::PI)];
    assert_eq!(unsafe { stokes_classical_plus(a.as_ptr(), 2, &mut out) }, StokesStatus::MathDomain);
    assert!(last_error().starts_with("resonant"));
    assert_eq!(unsafe { stokes_classical_plus(ptr::null(), 2, &mut out) }, StokesStatus::NullPointer);
    let mut g = cx(0.0, 0.0);
    assert_eq!(unsafe { stokes_gamma(cx(-2.0, 0.0), &mut g) }, StokesStatus::MathDomain);
    // a success clears the message
    assert_eq!(unsafe { stokes_gamma(cx(5.0, 0.0), &mut g) }, StokesStatus::Ok);
    assert!(stokes_last_error().is_null());
    assert!((g.re - 24.0).abs() < 1e-12 && g.im == 0.0);
}

#[test]
fn rep_check_through_abi() {
    let w = [2i64, 1, 0];
    let (mut passed, mut count) = (0, 0usize);
    assert_eq!(unsafe { stokes_rep_check(w.as_ptr(), 3, &mut passed, &mut count) }, StokesStatus::Ok);
    assert_eq!(passed, 1);
    assert!(count > 10);
}

#[test]
fn null_handles_tolerated() {
    unsafe {
        stokes_matrix_free(ptr::null_mut());
        assert_eq!(stokes_matrix_dim(ptr::null()), 0);
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(crate_dir().join("include/stokes_lab.h")).unwrap();
    for name in [
        "stokes_last_error",
        "stokes_classical_plus",
        "stokes_classical_numeric",
        "stokes_quantum_plus",
        "stokes_quantum_numeric",
        "stokes_rep_check",
        "stokes_gamma",
        "stokes_matrix_dim",
        "stokes_matrix_copy",
        "stokes_matrix_max_diff",
        "stokes_matrix_free",
        "typedef struct StokesMatrix StokesMatrix;",
        "STOKES_STATUS_MATH_DOMAIN = 3",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

/// Directory holding the static library: the parent of the test binary's `deps/`.
fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler ({cc}); skipping");
        return;
    }
    let lib = lib_dir().join("libstokes_lab_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let bin = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("stokes_smoke");
    let status = Command::new(&cc)
        .arg(crate_dir().join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
