//! C ABI over the `operc` engine.
//!
//! Every fallible call returns an [`OpercStatus`]; on failure a message is
//! available from [`operc_last_error`] on the same thread. Handles are opaque
//! and owned by the caller until passed to the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use operc::cli::{write_table, Format};
use operc::estimate::{
    estimate_wn, mc_crossing_with, survival_curve, Kind, McOptions, ScalingTable, WnOptions, WnParams, Z95,
};
use operc::randfield::Mode;
use operc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpercStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CoupledModeRequired = 3,
    Runtime = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpercMode {
    Fast = 0,
    Coupled = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpercKind {
    /// Left to right.
    H = 0,
    /// Bottom to top.
    V = 1,
}

/// A proportion with its Wilson interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OpercEstimate {
    pub k: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
}

/// One row of a scaling table. `estimate` is NaN when nothing contributed.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OpercRow {
    pub n: i64,
    pub estimate: f64,
    pub std_error: f64,
    pub k: u64,
    pub trials: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OpercWidth {
    pub w_hat: i64,
    pub m_lo: i64,
    pub m_hi: i64,
    pub samples_used: u64,
    pub unresolved: bool,
    pub degenerate: bool,
}

/// Seed and sampling mode shared by the estimators.
pub struct OpercLab {
    seed: u64,
    mode: Mode,
}

/// A scaling table produced by one of the curve estimators.
pub struct OpercTable(ScalingTable);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OpercStatus {
    match e {
        Error::CoupledModeRequired => OpercStatus::CoupledModeRequired,
        Error::InvalidArgument(_) | Error::NotASite { .. } | Error::EmptyRect { .. } => OpercStatus::InvalidArgument,
        _ => OpercStatus::Runtime,
    }
}

/// Runs `f`, recording errors and turning panics into [`OpercStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), OpercStatus>) -> OpercStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OpercStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            OpercStatus::Panic
        }
    }
}

fn fail(e: Error) -> OpercStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> OpercStatus {
    set_error(format!("{what} is null"));
    OpercStatus::NullPointer
}

/// Last error message on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn operc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn operc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn operc_lab_new(seed: u64, out: *mut *mut OpercLab) -> OpercStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let lab = Box::new(OpercLab { seed, mode: Mode::Fast });
        unsafe { *out = Box::into_raw(lab) };
        Ok(())
    })
}

/// # Safety
/// `lab` must come from [`operc_lab_new`] and not be freed already. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn operc_lab_free(lab: *mut OpercLab) {
    if !lab.is_null() {
        drop(unsafe { Box::from_raw(lab) });
    }
}

/// # Safety
/// `lab` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn operc_lab_set_mode(lab: *mut OpercLab, mode: OpercMode) -> OpercStatus {
    guard(|| {
        let lab = unsafe { lab.as_mut() }.ok_or_else(|| null("lab"))?;
        lab.mode = match mode {
            OpercMode::Fast => Mode::Fast,
            OpercMode::Coupled => Mode::Coupled,
        };
        Ok(())
    })
}

/// Crossing probability of `[0,m] x [0,n]` from `trials` replicas.
///
/// # Safety
/// `lab` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn operc_crossing(
    lab: *const OpercLab,
    kind: OpercKind,
    m: i64,
    n: i64,
    p: f64,
    trials: u64,
    out: *mut OpercEstimate,
) -> OpercStatus {
    guard(|| {
        let lab = unsafe { lab.as_ref() }.ok_or_else(|| null("lab"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = match kind {
            OpercKind::H => Kind::H,
            OpercKind::V => Kind::V,
        };
        let opts = McOptions {
            mode: lab.mode,
            z: Z95,
            stream: 0,
        };
        let e = mc_crossing_with(kind, m, n, p, trials, lab.seed, &opts).map_err(fail)?;
        unsafe {
            *out = OpercEstimate {
                k: e.k,
                trials: e.trials,
                p_hat: e.p_hat,
                lo: e.lo,
                hi: e.hi,
            }
        };
        Ok(())
    })
}

/// Survival probabilities at the strictly ascending heights `n_list[0..len]`.
///
/// # Safety
/// `lab` must be a live handle, `n_list` valid for `len` reads, `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn operc_survival_curve(
    lab: *const OpercLab,
    p: f64,
    n_list: *const i64,
    len: usize,
    trials: u64,
    out: *mut *mut OpercTable,
) -> OpercStatus {
    guard(|| {
        let lab = unsafe { lab.as_ref() }.ok_or_else(|| null("lab"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ns: &[i64] = if len == 0 {
            &[]
        } else if n_list.is_null() {
            return Err(null("n_list"));
        } else {
            unsafe { std::slice::from_raw_parts(n_list, len) }
        };
        let t = survival_curve(p, ns, trials, lab.seed).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(OpercTable(t))) };
        Ok(())
    })
}

/// # Safety
/// `table` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn operc_table_len(table: *const OpercTable) -> usize {
    unsafe { table.as_ref() }.map_or(0, |t| t.0.rows.len())
}

/// # Safety
/// `table` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn operc_table_row(table: *const OpercTable, i: usize, out: *mut OpercRow) -> OpercStatus {
    guard(|| {
        let t = unsafe { table.as_ref() }.ok_or_else(|| null("table"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = t.0.rows.get(i).ok_or_else(|| {
            fail(Error::invalid(format!("row {i} out of range ({} rows)", t.0.rows.len())))
        })?;
        unsafe {
            *out = OpercRow {
                n: r.n,
                estimate: r.estimate,
                std_error: r.stderr,
                k: r.k,
                trials: r.trials,
            }
        };
        Ok(())
    })
}

/// Writes the table as NUL-terminated CSV into `buf`. `*needed` receives the
/// required size including the NUL; pass `buf = NULL, cap = 0` to query it.
///
/// # Safety
/// `table` must be a live handle, `buf` valid for `cap` writes, `needed` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn operc_table_csv(
    table: *const OpercTable,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> OpercStatus {
    guard(|| {
        let t = unsafe { table.as_ref() }.ok_or_else(|| null("table"))?;
        if needed.is_null() {
            return Err(null("needed"));
        }
        let bytes = write_table(&t.0, Format::Csv);
        unsafe { *needed = bytes.len() + 1 };
        if cap < bytes.len() + 1 {
            set_error(format!("buffer of {cap} bytes, need {}", bytes.len() + 1));
            return Err(OpercStatus::BufferTooSmall);
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        unsafe {
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), bytes.len());
            *buf.add(bytes.len()) = 0;
        }
        Ok(())
    })
}

/// # Safety
/// `table` must come from this library and not be freed already. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn operc_table_free(table: *mut OpercTable) {
    if !table.is_null() {
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Empirical width scale at height `n`.
///
/// # Safety
/// `lab` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn operc_width_scale(
    lab: *const OpercLab,
    p: f64,
    n: i64,
    alpha: f64,
    eps: f64,
    trials: u64,
    max_samples: u64,
    out: *mut OpercWidth,
) -> OpercStatus {
    guard(|| {
        let lab = unsafe { lab.as_ref() }.ok_or_else(|| null("lab"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let params = WnParams::new(alpha, eps).map_err(fail)?;
        let opts = WnOptions {
            mode: lab.mode,
            z: Z95,
            max_samples,
        };
        let w = estimate_wn(p, n, params, trials, lab.seed, &opts).map_err(fail)?;
        unsafe {
            *out = OpercWidth {
                w_hat: w.w_hat,
                m_lo: w.bracket.0,
                m_hi: w.bracket.1,
                samples_used: w.samples_used,
                unresolved: w.unresolved,
                degenerate: w.degenerate,
            }
        };
        Ok(())
    })
}

/// Parses `"fast"` or `"coupled"` (case-insensitive).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn operc_mode_parse(name: *const c_char, out: *mut OpercMode) -> OpercStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let s = unsafe { CStr::from_ptr(name) }
            .to_str()
            .map_err(|e| fail(Error::invalid(e.to_string())))?;
        let m: Mode = s.parse().map_err(fail)?;
        unsafe {
            *out = match m {
                Mode::Fast => OpercMode::Fast,
                Mode::Coupled => OpercMode::Coupled,
            }
        };
        Ok(())
    })
}
