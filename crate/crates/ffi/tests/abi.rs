use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use poulsen_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    pl_string_free(p);
    s
}

#[test]
fn bset_density_and_sieve() {
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(pl_bset_parse(c("2,3").as_ptr(), 0, &mut b), PlStatus::Ok);
        let mut d = 0.0;
        assert_eq!(pl_bset_density(b, 1_000_000, &mut d), PlStatus::Ok);
        assert!((d - 1.0 / 3.0).abs() < 1e-5);
        let mut w = ptr::null_mut();
        assert_eq!(pl_bset_sieve(b, 12, &mut w), PlStatus::Ok);
        assert_eq!(pl_window_len(w), 12);
        let mut buf = [9u8; 12];
        assert_eq!(pl_window_copy_bits(w, buf.as_mut_ptr(), 12), PlStatus::Ok);
        assert_eq!(buf, [0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1]);
        assert_eq!(
            pl_window_copy_bits(w, buf.as_mut_ptr(), 3),
            PlStatus::OutOfRange
        );
        assert_eq!(
            take_string(pl_window_to_string(w)),
            "# start=0 length=12\n010001010001\n"
        );
        pl_window_free(w);
        pl_bset_free(b);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(pl_bset_parse(c("2,x").as_ptr(), 0, &mut b), PlStatus::Parse);
        assert!(b.is_null());
        assert!(take_string(pl_last_error_message()).contains("bad modulus"));
        assert_eq!(pl_bset_parse(ptr::null(), 0, &mut b), PlStatus::NullPointer);
        let mut d = 0.0;
        assert_eq!(
            pl_bset_density(ptr::null(), 10, &mut d),
            PlStatus::NullPointer
        );
        let mut chain = ptr::null_mut();
        assert_eq!(
            pl_chain_new(1, false, &mut chain),
            PlStatus::InvalidArgument
        );
        let mut w = ptr::null_mut();
        assert_eq!(
            pl_window_bernoulli(0, 10, 1.5, 0, &mut w),
            PlStatus::InvalidArgument
        );
        let (mut a, mut z) = (ptr::null_mut(), ptr::null_mut());
        pl_window_bernoulli(0, 10, 0.5, 0, &mut a);
        pl_window_bernoulli(0, 11, 0.5, 0, &mut z);
        assert_eq!(pl_window_multiply(a, z, &mut w), PlStatus::LengthMismatch);
        pl_window_free(a);
        pl_window_free(z);
        // freeing null is a no-op
        pl_window_free(ptr::null_mut());
        pl_string_free(ptr::null_mut());
    }
}

#[test]
fn chains_through_the_abi() {
    unsafe {
        let mut chain = ptr::null_mut();
        assert_eq!(pl_chain_new(3, true, &mut chain), PlStatus::Ok);
        assert_eq!(pl_chain_state_count(chain), 8);
        let mut ok = false;
        assert_eq!(pl_chain_verify(chain, &mut ok), PlStatus::Ok);
        assert!(ok);
        assert_eq!(take_string(pl_chain_stationary(chain, 0)), "1/7");
        assert_eq!(take_string(pl_chain_stationary(chain, 3)), "1/14");
        assert!(pl_chain_stationary(chain, 8).is_null());
        let mut e = 0;
        assert_eq!(pl_chain_primitivity_exponent(chain, &mut e), PlStatus::Ok);
        assert_eq!(e, 10);
        pl_chain_free(chain);
    }
}

#[test]
fn midpoint_through_the_abi() {
    unsafe {
        let mut b = ptr::null_mut();
        pl_bset_parse(c("2,3").as_ptr(), 0, &mut b);
        let (mut eta, mut coin, mut x2) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        pl_bset_sieve(b, 200_000, &mut eta);
        pl_window_bernoulli(0, 200_000, 0.5, 5, &mut coin);
        assert_eq!(pl_window_multiply(eta, coin, &mut x2), PlStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(
            pl_midpoint_run(eta, eta, x2, 1, 0.05, 0.0, 0, 11, &mut m),
            PlStatus::Ok
        );
        let (mut tv, mut n0, mut passed) = (1.0, 0, false);
        pl_midpoint_achieved_tv(m, &mut tv);
        pl_midpoint_n0(m, &mut n0);
        pl_midpoint_passed(m, &mut passed);
        assert!(tv <= 0.05 && n0 >= 2 && passed);
        let mut bar = ptr::null_mut();
        assert_eq!(pl_midpoint_eta_bar(m, &mut bar), PlStatus::Ok);
        assert_eq!(pl_window_len(bar), 200_000);
        assert!(pl_window_count_ones(bar) <= pl_window_count_ones(eta));
        let json = take_string(pl_midpoint_to_json(m));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["n0"], n0);

        // fixed n0 and explicit eps
        let mut m2 = ptr::null_mut();
        assert_eq!(
            pl_midpoint_run(eta, eta, x2, 1, 0.05, 0.01, 16, 11, &mut m2),
            PlStatus::Ok
        );
        pl_midpoint_n0(m2, &mut n0);
        assert_eq!(n0, 16);
        assert_eq!(
            pl_midpoint_run(eta, eta, x2, 1, 0.05, 0.06, 0, 11, &mut m2),
            PlStatus::InvalidArgument
        );
        for w in [eta, coin, x2, bar] {
            pl_window_free(w);
        }
        pl_midpoint_free(m);
        pl_midpoint_free(m2);
        pl_bset_free(b);
    }
}

#[test]
fn separation_through_the_abi() {
    unsafe {
        let mut sep = false;
        let (a, b) = (c("101001000"), c("101000100"));
        assert_eq!(
            pl_periods_separated(a.as_ptr(), b.as_ptr(), &mut sep),
            PlStatus::Ok
        );
        assert!(sep);
        assert_eq!(
            pl_periods_separated(a.as_ptr(), a.as_ptr(), &mut sep),
            PlStatus::Ok
        );
        assert!(!sep);
        let short = c("101");
        assert_eq!(
            pl_periods_separated(a.as_ptr(), short.as_ptr(), &mut sep),
            PlStatus::LengthMismatch
        );
        assert_eq!(
            pl_periods_separated(a.as_ptr(), c("10x").as_ptr(), &mut sep),
            PlStatus::Parse
        );
        assert_eq!(
            CStr::from_ptr(pl_version()).to_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/poulsen.h")
}

#[test]
fn header_declares_the_exported_surface() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "PL_STATUS_OK = 0",
        "PL_STATUS_INSUFFICIENT_GENERICITY",
        "typedef struct PlWindow PlWindow;",
        "PlStatus pl_bset_parse(const char *spec, uint64_t limit, PlBSet **out);",
        "pl_midpoint_run(",
        "void pl_string_free(char *s);",
        "char *pl_last_error_message(void);",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

/// Compile and run a C program against the static library.
#[test]
fn c_program_links_and_runs() {
    // target/<profile>/deps/abi-<hash> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpoulsen_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/smoke.c"))
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
