use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use polar_ldgm::kernels;
use polar_ldgm_ffi::*;

fn kernel(name: &str) -> *mut PlKernel {
    let name = CString::new(name).unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { pl_kernel_by_name(name.as_ptr(), &mut k) }, PlStatus::Ok);
    k
}

fn take_string(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { pl_string_free(s) };
    out
}

fn last_error() -> String {
    let p = pl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn kernel_queries_match_the_library() {
    for name in ["G2", "G3*", "G4*", "G3'", "G4'"] {
        let k = kernel(name);
        let core = kernels::by_name(name).unwrap();
        unsafe {
            assert_eq!(pl_kernel_size(k), core.size());
            assert_eq!(pl_kernel_exponent(k), core.exponent());
            let mut d = vec![0usize; core.size()];
            assert_eq!(pl_kernel_partial_distances(k, d.as_mut_ptr(), d.len()), PlStatus::Ok);
            assert_eq!(d, core.partial_distances());
            pl_kernel_free(k);
        }
    }
}

#[test]
fn kernel_from_bits() {
    let bits = [1u8, 0, 1, 1];
    let mut k = ptr::null_mut();
    unsafe {
        assert_eq!(pl_kernel_from_bits(bits.as_ptr(), 2, &mut k), PlStatus::Ok);
        assert_eq!(pl_kernel_exponent(k), 0.5);
        pl_kernel_free(k);
    }
    let upper = [1u8, 1, 0, 1];
    let status = unsafe { pl_kernel_from_bits(upper.as_ptr(), 2, &mut k) };
    assert_eq!(status, PlStatus::NotPolarizing);
    assert!(last_error().contains("upper triangular"));
    let bad = [1u8, 2, 1, 1];
    assert_eq!(unsafe { pl_kernel_from_bits(bad.as_ptr(), 2, &mut k) }, PlStatus::Parse);
}

#[test]
fn errors_and_null_handles() {
    let name = CString::new("G7").unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { pl_kernel_by_name(name.as_ptr(), &mut k) }, PlStatus::Parse);
    assert!(k.is_null());
    assert!(last_error().contains("unknown kernel"));
    assert_eq!(unsafe { pl_kernel_by_name(ptr::null(), &mut k) }, PlStatus::NullPointer);
    unsafe {
        assert_eq!(pl_kernel_size(ptr::null()), 0);
        assert!(pl_kernel_exponent(ptr::null()).is_nan());
        pl_kernel_free(ptr::null_mut());
        pl_generator_free(ptr::null_mut());
        pl_string_free(ptr::null_mut());
    }
}

#[test]
fn small_buffers_are_reported() {
    let k = kernel("G2");
    let mut out = [0.0f64; 3];
    unsafe {
        let s = pl_bec_reliabilities(k, 2, 0.5, out.as_mut_ptr(), out.len());
        assert_eq!(s, PlStatus::BufferTooSmall);
        let mut out = [0.0f64; 4];
        assert_eq!(pl_bec_reliabilities(k, 2, 0.5, out.as_mut_ptr(), 4), PlStatus::Ok);
        assert_eq!(out, [0.9375, 0.5625, 0.4375, 0.0625]);
        assert_eq!(pl_bec_reliabilities(k, 2, 1.5, out.as_mut_ptr(), 4), PlStatus::Domain);
        pl_kernel_free(k);
    }
}

#[test]
fn generator_split_round_trip() {
    let k = kernel("G2");
    let info: Vec<usize> = (0..16).collect();
    let mut g = ptr::null_mut();
    let mut s = ptr::null_mut();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(pl_generator_build(k, 4, info.as_ptr(), info.len(), &mut g), PlStatus::Ok);
        assert_eq!((pl_generator_rows(g), pl_generator_cols(g)), (16, 16));
        assert_eq!(pl_generator_max_column_weight(g), 16);
        assert_eq!(pl_generator_split(g, 4, &mut s, &mut r), PlStatus::Ok);
        assert_eq!(take_string(r), "7/16");
        assert_eq!(pl_generator_cols(s), 23);
        assert_eq!(pl_generator_max_column_weight(s), 4);
        let mut w = vec![0usize; 23];
        assert_eq!(pl_generator_column_weights(s, w.as_mut_ptr(), w.len()), PlStatus::Ok);
        assert_eq!(w.iter().sum::<usize>(), 81);
        assert_eq!(pl_generator_split(g, 0, &mut s, ptr::null_mut()), PlStatus::Domain);
        let bad = [16usize];
        let mut h = ptr::null_mut();
        assert_eq!(pl_generator_build(k, 4, bad.as_ptr(), 1, &mut h), PlStatus::Dimension);
        pl_generator_free(s);
        pl_generator_free(g);
        pl_kernel_free(k);
    }
}

#[test]
fn scalar_helpers() {
    assert_eq!(take_string(pl_exact_rate_loss(4, 4)), "7/16");
    assert_eq!(take_string(pl_exact_rate_loss(3, 8)), "0/1");
    assert!(pl_exact_rate_loss(3, 0).is_null());
    assert!((pl_epsilon_star() - (3f64.log2() - 1.5)).abs() < 1e-12);
    let v = unsafe { CStr::from_ptr(pl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/polar_ldgm.h")).unwrap();
    for f in [
        "pl_last_error", "pl_string_free", "pl_kernel_by_name", "pl_kernel_from_bits",
        "pl_kernel_free", "pl_kernel_size", "pl_kernel_exponent", "pl_kernel_partial_distances",
        "pl_bec_reliabilities", "pl_generator_build", "pl_generator_free", "pl_generator_rows",
        "pl_generator_cols", "pl_generator_max_column_weight", "pl_generator_column_weights",
        "pl_generator_split", "pl_exact_rate_loss", "pl_epsilon_star", "pl_version",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct PlKernel PlKernel;"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "polar_ldgm.h"

int main(void) {
    PlKernel *k = NULL;
    if (pl_kernel_by_name("G2", &k) != PL_STATUS_OK) return 1;
    size_t info[16];
    for (size_t i = 0; i < 16; i++) info[i] = i;
    PlGenerator *g = NULL, *s = NULL;
    char *r = NULL;
    if (pl_generator_build(k, 4, info, 16, &g) != PL_STATUS_OK) return 2;
    if (pl_generator_split(g, 4, &s, &r) != PL_STATUS_OK) return 3;
    if (strcmp(r, "7/16") != 0) return 4;
    if (pl_kernel_by_name("nope", &k) != PL_STATUS_PARSE) return 5;
    printf("%s %zu\n", r, pl_generator_cols(s));
    pl_string_free(r);
    pl_generator_free(s);
    pl_generator_free(g);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let lib_dir: PathBuf = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libpolar_ldgm_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("capi");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.join("main");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "7/16 23");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_owned());
        }
    }
    Err(())
}
