use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use lgdim_ffi::*;

const CARPET: &str = r#"{"rows":[{"b":0.5,"d":0.0,"cells":[{"a":0.3333333333333333,"c":0.0},{"a":0.3333333333333333,"c":0.6666666666666666}]},{"b":0.5,"d":0.5,"cells":[{"a":0.3333333333333333,"c":0.3333333333333333}]}]}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lgd_last_error_message()) }.to_string_lossy().into_owned()
}

fn scheme(json: &str) -> (LgdStatus, *mut LgdScheme) {
    let text = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { lgd_scheme_from_json(text.as_ptr(), &mut out) };
    (status, out)
}

#[test]
fn scheme_lifecycle() {
    let (status, s) = scheme(CARPET);
    assert_eq!(status, LgdStatus::Ok);
    let mut n = 0usize;
    let mut sep = false;
    unsafe {
        assert_eq!(lgd_scheme_alphabet_size(s, &mut n), LgdStatus::Ok);
        assert_eq!(lgd_scheme_is_strictly_separated(s, &mut sep), LgdStatus::Ok);
    }
    assert_eq!(n, 3);
    assert!(!sep);

    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(lgd_scheme_to_json(s, &mut json), LgdStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        lgd_string_free(json);
        let (status, again) = scheme(&text);
        assert_eq!(status, LgdStatus::Ok);
        lgd_scheme_free(again);
    }

    let mut dim = LgdDimension { value: 0.0, converged: false, iterations: 0, gradient_norm: 0.0 };
    let opts = lgd_options_default();
    assert_eq!(opts.restarts, 8);
    unsafe {
        assert_eq!(lgd_scheme_dimension(s, &opts, &mut dim), LgdStatus::Ok);
    }
    assert!((dim.value - 1.349_683_820_195_557_7).abs() < 1e-9);
    assert!(dim.converged);

    let w = [1.0 / 3.0; 3];
    let mut v = 0.0;
    unsafe {
        assert_eq!(lgd_scheme_objective(s, w.as_ptr(), 3, &mut v), LgdStatus::Ok);
        assert_eq!(lgd_scheme_objective(s, w.as_ptr(), 2, &mut v), LgdStatus::Domain);
        lgd_scheme_free(s);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let (status, s) = scheme(r#"{"rows":[{"b":0.25,"d":0.0,"cells":[{"a":0.5,"c":0.0}]}]}"#);
    assert_eq!(status, LgdStatus::Validation);
    assert!(s.is_null());
    assert!(last_error().contains("b >= a"));

    let (status, _) = scheme("{\"rows\": [");
    assert_eq!(status, LgdStatus::Parse);
    assert!(last_error().contains("line 1"));

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { lgd_scheme_from_json(ptr::null(), &mut out) }, LgdStatus::NullPointer);
    let bad = [0x7b_u8, 0xff, 0];
    assert_eq!(unsafe { lgd_scheme_from_json(bad.as_ptr().cast(), &mut out) }, LgdStatus::InvalidUtf8);
    let mut n = 0;
    assert_eq!(unsafe { lgd_scheme_alphabet_size(ptr::null(), &mut n) }, LgdStatus::NullPointer);

    let (status, s) = scheme(CARPET);
    assert_eq!(status, LgdStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { lgd_scheme_free(s) };
}

#[test]
fn family_operations() {
    let fam_json = format!(r#"{{"schemes":[{CARPET},{{"rows":[{{"b":0.5,"d":0.0,"cells":[{{"a":0.5,"c":0.0}}]}},{{"b":0.5,"d":0.5,"cells":[{{"a":0.5,"c":0.5}}]}}]}}]}}"#);
    let text = CString::new(fam_json).unwrap();
    let mut fam = ptr::null_mut();
    unsafe {
        assert_eq!(lgd_family_from_json(text.as_ptr(), &mut fam), LgdStatus::Ok);
        let mut len = 0;
        assert_eq!(lgd_family_len(fam, &mut len), LgdStatus::Ok);
        assert_eq!(len, 2);

        let word = [1usize, 2, 1];
        let mut composed = ptr::null_mut();
        assert_eq!(lgd_family_compose_word(fam, word.as_ptr(), 3, 1000, &mut composed), LgdStatus::Ok);
        let mut n = 0;
        lgd_scheme_alphabet_size(composed, &mut n);
        assert_eq!(n, 18);
        lgd_scheme_free(composed);
        assert_eq!(lgd_family_compose_word(fam, word.as_ptr(), 3, 10, &mut composed), LgdStatus::CapExceeded);

        let nums = [1u64, 1];
        let mut dim = LgdDimension { value: 0.0, converged: false, iterations: 0, gradient_norm: 0.0 };
        assert_eq!(lgd_family_dim_rational(fam, nums.as_ptr(), 2, ptr::null(), &mut dim), LgdStatus::Ok);
        assert!((dim.value - 1.219_054_710_528_345_8).abs() < 1e-9);
        let zero = [1u64, 0];
        assert_eq!(lgd_family_dim_rational(fam, zero.as_ptr(), 2, ptr::null(), &mut dim), LgdStatus::Domain);
        lgd_family_free(fam);
    }
}

#[test]
fn closed_form_oracle() {
    let rows = [2usize, 1];
    let mut v = 0.0;
    assert_eq!(unsafe { lgd_mcmullen_oracle(3, 2, rows.as_ptr(), 2, &mut v) }, LgdStatus::Ok);
    assert!((v - 1.349_683_820_195_557_7).abs() < 1e-12);
    assert_eq!(unsafe { lgd_mcmullen_oracle(2, 3, rows.as_ptr(), 2, &mut v) }, LgdStatus::Domain);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/lgdim.h")).unwrap();
    for name in [
        "lgd_scheme_from_json", "lgd_scheme_free", "lgd_scheme_alphabet_size", "lgd_scheme_is_strictly_separated",
        "lgd_scheme_to_json", "lgd_string_free", "lgd_options_default", "lgd_scheme_dimension", "lgd_scheme_objective",
        "lgd_family_from_json", "lgd_family_free", "lgd_family_len", "lgd_family_compose_word",
        "lgd_family_dim_rational", "lgd_mcmullen_oracle", "lgd_last_error_message", "LGD_STATUS_CAP_EXCEEDED",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles a small C program against the header and the static library.
/// Skipped when no C compiler or archive is available.
#[test]
fn c_program_links() {
    let Ok(exe) = std::env::current_exe() else { return };
    let profile_dir = exe.parent().and_then(|d| d.parent()).map(PathBuf::from).unwrap();
    let archive = profile_dir.join("liblgdim_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no archive at {} or no cc", archive.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "lgdim.h"
int main(void) {
    size_t rows[] = {2, 1};
    double v = 0.0;
    if (lgd_mcmullen_oracle(3, 2, rows, 2, &v) != LGD_STATUS_OK) return 1;
    LgdScheme *s = NULL;
    if (lgd_scheme_from_json("{\"rows\":[]}", &s) != LGD_STATUS_VALIDATION) return 2;
    printf("%.12f\n", v);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1.349683820196");
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lgdim-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
