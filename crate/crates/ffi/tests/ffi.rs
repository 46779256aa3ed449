use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nmvm_ffi::*;

fn model2() -> *mut NmvmModel {
    let mu = [0.05, 0.03];
    let gamma = [0.02, -0.01];
    let a = [0.2, 0.0, 0.05, 0.15];
    let mut m = ptr::null_mut();
    let s = unsafe { nmvm_model_new(2, 0.01, mu.as_ptr(), gamma.as_ptr(), a.as_ptr(), &mut m) };
    assert_eq!(s, NmvmStatus::Ok);
    m
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(nmvm_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn gaussian_exp_opt_through_c_abi() {
    let m = model2();
    let mut mix = ptr::null_mut();
    unsafe {
        assert_eq!(nmvm_mixing_constant(1.0, &mut mix), NmvmStatus::Ok);
        assert_eq!(nmvm_model_size(m), 2);
        let mut x = [0.0; 2];
        let mut s = NmvmExpOptSummary::default();
        assert_eq!(nmvm_exp_opt(m, mix, 2.0, 1.0, x.as_mut_ptr(), 2, &mut s), NmvmStatus::Ok);
        assert!((s.q_min + 1.0).abs() < 1e-10);
        assert!(s.theta0.is_infinite());
        assert!(last_error().is_empty());

        let mut small = [0.0; 1];
        assert_eq!(nmvm_exp_opt(m, mix, 2.0, 1.0, small.as_mut_ptr(), 1, ptr::null_mut()), NmvmStatus::BufferTooSmall);
        assert!(last_error().contains("2 needed"));
        nmvm_mixing_free(mix);
        nmvm_model_free(m);
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    let mut mix = ptr::null_mut();
    unsafe {
        assert_eq!(nmvm_mixing_exponential(-1.0, &mut mix), NmvmStatus::InvalidArgument);
        assert!(mix.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(nmvm_mixing_gig(0.5, 1.0, 1.0, ptr::null_mut()), NmvmStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(nmvm_mixing_laplace(ptr::null(), 0.0, &mut v), NmvmStatus::NullPointer);
        let mut m = ptr::null_mut();
        assert_eq!(nmvm_model_new(2, 0.0, ptr::null(), ptr::null(), ptr::null(), &mut m), NmvmStatus::NullPointer);
        nmvm_model_free(ptr::null_mut());
        nmvm_mixing_free(ptr::null_mut());
        nmvm_large_market_free(ptr::null_mut());
    }
}

#[test]
fn mixing_queries() {
    let mut mix = ptr::null_mut();
    unsafe {
        assert_eq!(nmvm_mixing_exponential(2.0, &mut mix), NmvmStatus::Ok);
        let mut v = 0.0;
        assert_eq!(nmvm_mixing_laplace(mix, 1.0, &mut v), NmvmStatus::Ok);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(nmvm_mixing_moment(mix, 2.0, &mut v), NmvmStatus::Ok);
        assert!((v - 0.5).abs() < 1e-14);
        assert_eq!(nmvm_mixing_laplace(mix, -3.0, &mut v), NmvmStatus::InvalidArgument);
        nmvm_mixing_free(mix);
    }
}

#[test]
fn general_opt_and_large_market() {
    let m = model2();
    let mut mix = ptr::null_mut();
    let mut lm = ptr::null_mut();
    unsafe {
        assert_eq!(nmvm_mixing_gig(-0.5, 1.0, 1.0, &mut mix), NmvmStatus::Ok);
        let mut x = [0.0; 2];
        let mut s = NmvmGeneralOptSummary::default();
        let st = nmvm_general_opt(m, mix, NmvmUtility::Quadratic, 0.25, 4, 1.0, x.as_mut_ptr(), 2, &mut s);
        assert_eq!(st, NmvmStatus::Ok);
        assert_eq!(s.truncation_gap, 0.0);
        assert!(s.rho > 0.0);
        assert_eq!(
            nmvm_general_opt(m, mix, NmvmUtility::Power, 0.0, 4, 1.0, x.as_mut_ptr(), 2, &mut s),
            NmvmStatus::InvalidArgument
        );

        assert_eq!(nmvm_large_market_new(0.5, 1.1, 0.5, 1.1, 0.3, 1.0, 1.0, 0.0, 0.5, 1.5, 64, &mut lm), NmvmStatus::Ok);
        let (mut u8_, mut u64_) = (0.0, 0.0);
        assert_eq!(nmvm_large_market_u(lm, 8, &mut u8_), NmvmStatus::Ok);
        assert_eq!(nmvm_large_market_u(lm, 64, &mut u64_), NmvmStatus::Ok);
        assert!(u64_ <= u8_ && u64_ > 0.0);
        assert_eq!(nmvm_large_market_u(lm, 65, &mut u64_), NmvmStatus::InvalidArgument);
        nmvm_large_market_free(lm);
        nmvm_mixing_free(mix);
        nmvm_model_free(m);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/nmvm.h")).unwrap();
    for name in [
        "nmvm_last_error",
        "nmvm_model_new",
        "nmvm_model_free",
        "nmvm_mixing_gig",
        "nmvm_exp_opt",
        "nmvm_general_opt",
        "nmvm_large_market_u",
        "typedef struct NmvmModel NmvmModel",
        "NMVM_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// The static library next to this test binary's profile directory.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile = exe.parent()?.parent()?;
    [profile.join("libnmvm_ffi.a"), profile.join("deps").join("libnmvm_ffi.a")].into_iter().find(|p| p.exists())
}

#[test]
#[cfg(target_os = "linux")]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib() else {
        panic!("libnmvm_ffi.a not found next to {:?}", std::env::current_exe());
    };
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let cc = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .expect("cc available");
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
}
