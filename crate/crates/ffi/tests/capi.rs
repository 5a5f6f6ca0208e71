use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use operc::estimate::{mc_crossing, survival_curve, Kind};
use operc_ffi::*;

fn last_error() -> String {
    let p = operc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn lab(seed: u64) -> *mut OpercLab {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { operc_lab_new(seed, &mut h) }, OpercStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn crossing_matches_the_library() {
    let h = lab(21);
    let mut e = OpercEstimate::default();
    let st = unsafe { operc_crossing(h, OpercKind::H, 6, 8, 0.62, 2000, &mut e) };
    assert_eq!(st, OpercStatus::Ok);
    let direct = mc_crossing(Kind::H, 6, 8, 0.62, 2000, 21).unwrap();
    assert_eq!((e.k, e.trials, e.p_hat, e.lo, e.hi), (direct.k, direct.trials, direct.p_hat, direct.lo, direct.hi));
    unsafe { operc_lab_free(h) };
}

#[test]
fn errors_carry_status_and_message() {
    let h = lab(1);
    let mut e = OpercEstimate::default();
    assert_eq!(
        unsafe { operc_crossing(h, OpercKind::V, 4, 4, 1.5, 10, &mut e) },
        OpercStatus::InvalidArgument
    );
    assert!(last_error().contains("1.5"), "{}", last_error());
    assert_eq!(
        unsafe { operc_crossing(ptr::null(), OpercKind::V, 4, 4, 0.5, 10, &mut e) },
        OpercStatus::NullPointer
    );
    assert_eq!(
        unsafe { operc_crossing(h, OpercKind::V, 4, 4, 0.5, 10, ptr::null_mut()) },
        OpercStatus::NullPointer
    );
    let mut w = OpercWidth::default();
    assert_eq!(
        unsafe { operc_width_scale(h, 0.6, 16, 0.5, 0.25, 100, 1000, &mut w) },
        OpercStatus::InvalidArgument
    );
    unsafe {
        operc_lab_free(h);
        operc_lab_free(ptr::null_mut());
        operc_table_free(ptr::null_mut());
    }
}

#[test]
fn survival_table_round_trip() {
    let h = lab(8);
    let ns = [2i64, 4, 8];
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { operc_survival_curve(h, 0.7, ns.as_ptr(), ns.len(), 3000, &mut t) },
        OpercStatus::Ok
    );
    let direct = survival_curve(0.7, &ns, 3000, 8).unwrap();
    assert_eq!(unsafe { operc_table_len(t) }, 3);
    for (i, r) in direct.rows.iter().enumerate() {
        let mut row = OpercRow::default();
        assert_eq!(unsafe { operc_table_row(t, i, &mut row) }, OpercStatus::Ok);
        assert_eq!((row.n, row.estimate, row.std_error, row.k), (r.n, r.estimate, r.stderr, r.k));
    }
    let mut row = OpercRow::default();
    assert_eq!(unsafe { operc_table_row(t, 3, &mut row) }, OpercStatus::InvalidArgument);

    let mut needed = 0usize;
    assert_eq!(
        unsafe { operc_table_csv(t, ptr::null_mut(), 0, &mut needed) },
        OpercStatus::BufferTooSmall
    );
    let mut buf = vec![0 as std::ffi::c_char; needed];
    assert_eq!(unsafe { operc_table_csv(t, buf.as_mut_ptr(), buf.len(), &mut needed) }, OpercStatus::Ok);
    let csv = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert!(csv.starts_with("n,estimate,stderr,k,N,seed\n2,"));
    assert_eq!(csv.lines().count(), 4);
    unsafe {
        operc_table_free(t);
        operc_lab_free(h);
    }
}

#[test]
fn width_scale_and_modes() {
    let h = lab(3);
    let mut w = OpercWidth::default();
    assert_eq!(unsafe { operc_width_scale(h, 1.0, 32, 0.8, 0.25, 50, 1000, &mut w) }, OpercStatus::Ok);
    assert!(w.degenerate);
    let mut m = OpercMode::Fast;
    let name = CString::new("Coupled").unwrap();
    assert_eq!(unsafe { operc_mode_parse(name.as_ptr(), &mut m) }, OpercStatus::Ok);
    assert_eq!(m, OpercMode::Coupled);
    let bad = CString::new("slow").unwrap();
    assert_eq!(unsafe { operc_mode_parse(bad.as_ptr(), &mut m) }, OpercStatus::InvalidArgument);
    assert_eq!(unsafe { operc_lab_set_mode(h, OpercMode::Coupled) }, OpercStatus::Ok);
    let mut e = OpercEstimate::default();
    assert_eq!(unsafe { operc_crossing(h, OpercKind::V, 4, 4, 1.0, 10, &mut e) }, OpercStatus::Ok);
    assert_eq!(e.k, 10);
    unsafe { operc_lab_free(h) };
    let v = unsafe { CStr::from_ptr(operc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let src = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(crate_dir().join("include/operc.h")).unwrap();
    let mut lines = src.lines();
    let mut exported = 0;
    while let Some(l) = lines.next() {
        if l.trim() == "#[no_mangle]" {
            let decl = lines.next().unwrap();
            let name = decl.split("fn ").nth(1).unwrap().split('(').next().unwrap();
            assert!(header.contains(&format!("{name}(")), "{name} missing from header");
            exported += 1;
        }
    }
    assert!(exported >= 10);
    for ty in ["OpercLab", "OpercTable", "OpercStatus", "OPERC_STATUS_NULL_POINTER"] {
        assert!(header.contains(ty), "{ty}");
    }
}

/// Directory holding the library artifacts of this build.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = artifact_dir().join("liboperc_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler ({cc}); C link test not run");
        return;
    }
    assert!(lib.exists(), "{}", lib.display());
    let dir = tempfile_dir();
    let c_src = dir.join("smoke.c");
    std::fs::write(
        &c_src,
        r#"#include <stdio.h>
#include <math.h>
#include "operc.h"
int main(void) {
    OpercLab *lab = NULL;
    if (operc_lab_new(5, &lab) != OPERC_STATUS_OK) return 10;
    OpercEstimate e;
    if (operc_crossing(lab, OPERC_KIND_V, 6, 6, 1.0, 100, &e) != OPERC_STATUS_OK) return 11;
    if (e.k != 100) return 12;
    if (operc_crossing(lab, OPERC_KIND_V, 6, 6, -0.1, 100, &e) != OPERC_STATUS_INVALID_ARGUMENT) return 13;
    if (operc_last_error() == NULL) return 14;
    int64_t ns[] = {1, 2};
    OpercTable *t = NULL;
    if (operc_survival_curve(lab, 0.5, ns, 2, 4000, &t) != OPERC_STATUS_OK) return 15;
    OpercRow r;
    if (operc_table_row(t, 0, &r) != OPERC_STATUS_OK) return 16;
    if (fabs(r.estimate - 0.75) > 0.05) return 17;
    operc_table_free(t);
    operc_lab_free(lab);
    printf("ok %s\n", operc_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("smoke");
    let st = Command::new(&cc)
        .arg(&c_src)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn tempfile_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("capi");
    std::fs::create_dir_all(&d).unwrap();
    d
}
