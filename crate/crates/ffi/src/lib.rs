//! C ABI over the gpvortex core: opaque handles, status codes and a per-thread last-error message.
//!
//! Every function returns a `GpvStatus`; on failure `gpv_last_error` holds the message.
//! Handles are created by `*_new`/`*_solve` and released by the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gpvortex::atlas::{counts, last_bifurcation};
use gpvortex::hessian::{assemble_h, find_crossing, full_morse_count};
use gpvortex::primary::{solve_primary, PrimaryBranchPoint};
use gpvortex::radial::RadialDiscretization;
use gpvortex::vortex::polygon_radius;
use gpvortex::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Radial Galerkin discretization (opaque).
pub struct GpvDiscretization(RadialDiscretization);

/// Primary vortex branch point (opaque).
pub struct GpvPrimary(PrimaryBranchPoint);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GpvCounts {
    pub m0: u32,
    pub n: u64,
    pub z: u64,
    pub b: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GpvCrossing {
    pub m: i32,
    pub n: u32,
    pub omega: f64,
    pub eigenvalue: f64,
    /// ‖V‖² − ‖W‖² of the null vector.
    pub krein: f64,
    pub resonant: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GpvLastBifurcation {
    pub omega_tilde: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: GpvStatus, msg: impl Into<String>) -> GpvStatus {
    set_error(msg.into());
    status
}

fn from_core(e: Error) -> GpvStatus {
    let status = match e {
        Error::InvalidArgument(_)
        | Error::UnsupportedMode { .. }
        | Error::Resolution { .. }
        | Error::InsufficientBlocks { .. }
        | Error::Aliasing(_) => GpvStatus::InvalidArgument,
        _ => GpvStatus::Numerical,
    };
    fail(status, e.to_string())
}

fn guard<F: FnOnce() -> GpvStatus>(f: F) -> GpvStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(GpvStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(GpvStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

macro_rules! out {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(GpvStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return from_core(e),
        }
    };
}

static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");

/// Toolkit version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gpv_version() -> *const c_char {
    VERSION.as_ptr() as *const c_char
}

/// Copies the last error of this thread into `buf` (truncating, always NUL-terminated).
/// Returns the full message length excluding the NUL; 0 if there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gpv_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// # Safety
/// `out` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gpv_counts(m0: u32, out: *mut GpvCounts) -> GpvStatus {
    guard(|| {
        let out = out!(out);
        let c = tri!(counts(m0));
        *out = GpvCounts { m0: c.m0, n: c.n, z: c.z, b: c.b };
        GpvStatus::Ok
    })
}

/// # Safety
/// `out` must be null or a valid pointer; on success it receives a handle for `gpv_discretization_free`.
#[no_mangle]
pub unsafe extern "C" fn gpv_discretization_new(n_r: usize, max_m: u32, out: *mut *mut GpvDiscretization) -> GpvStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        let d = tri!(RadialDiscretization::new(n_r, max_m));
        *out = Box::into_raw(Box::new(GpvDiscretization(d)));
        GpvStatus::Ok
    })
}

/// # Safety
/// `disc` must be null or a handle from `gpv_discretization_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpv_discretization_free(disc: *mut GpvDiscretization) {
    if !disc.is_null() {
        drop(Box::from_raw(disc));
    }
}

/// # Safety
/// `disc` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_primary_solve(
    m0: u32,
    a: f64,
    disc: *const GpvDiscretization,
    out: *mut *mut GpvPrimary,
) -> GpvStatus {
    guard(|| {
        let out = out!(out);
        *out = ptr::null_mut();
        let d = deref!(disc);
        let p = tri!(solve_primary(m0, a, &d.0));
        *out = Box::into_raw(Box::new(GpvPrimary(p)));
        GpvStatus::Ok
    })
}

/// # Safety
/// `p` must be null or a handle from `gpv_primary_solve` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpv_primary_free(p: *mut GpvPrimary) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Detuned frequency ω of the branch point.
///
/// # Safety
/// `p` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_primary_omega(p: *const GpvPrimary, out: *mut f64) -> GpvStatus {
    guard(|| {
        *out!(out) = deref!(p).0.omega;
        GpvStatus::Ok
    })
}

/// Profile ψ(r).
///
/// # Safety
/// `p` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_primary_psi(p: *const GpvPrimary, r: f64, out: *mut f64) -> GpvStatus {
    guard(|| {
        *out!(out) = deref!(p).0.psi(r);
        GpvStatus::Ok
    })
}

fn copy_out(values: &[f64], buf: *mut f64, len: usize, count: &mut usize) -> GpvStatus {
    *count = values.len();
    if values.len() > len {
        return fail(GpvStatus::BufferTooSmall, format!("need {} entries, buffer has {len}", values.len()));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return fail(GpvStatus::NullPointer, "buf is null");
        }
        unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
    }
    GpvStatus::Ok
}

/// Radial coefficients of ψ. `*count` receives the required length even when the buffer is too small.
///
/// # Safety
/// `p` must be a live handle; `buf` valid for `len` doubles; `count` valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_primary_coefficients(
    p: *const GpvPrimary,
    buf: *mut f64,
    len: usize,
    count: *mut usize,
) -> GpvStatus {
    guard(|| {
        let count = out!(count);
        copy_out(&deref!(p).0.coeffs, buf, len, count)
    })
}

/// Ascending eigenvalues of the Hessian block H_m at rotation `omega_rot`.
///
/// # Safety
/// Handles must be live; `buf` valid for `len` doubles; `count` valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_block_eigenvalues(
    p: *const GpvPrimary,
    disc: *const GpvDiscretization,
    m: i32,
    omega_rot: f64,
    buf: *mut f64,
    len: usize,
    count: *mut usize,
) -> GpvStatus {
    guard(|| {
        let count = out!(count);
        let (p, d) = (deref!(p), deref!(disc));
        let block = tri!(assemble_h(m, &p.0, omega_rot, &d.0));
        let mut v = block.eigen.values.clone();
        v.sort_by(f64::total_cmp);
        copy_out(&v, buf, len, count)
    })
}

/// Negative eigenvalues of the full Hessian, with the certified block cutoff.
///
/// # Safety
/// Handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_full_morse_count(
    p: *const GpvPrimary,
    disc: *const GpvDiscretization,
    omega_rot: f64,
    out: *mut usize,
) -> GpvStatus {
    guard(|| {
        let out = out!(out);
        let (p, d) = (deref!(p), deref!(disc));
        *out = tri!(full_morse_count(&p.0, omega_rot, None, &d.0)).total;
        GpvStatus::Ok
    })
}

/// Zero crossing of track n of block m inside [lo, hi].
///
/// # Safety
/// Handles must be live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_find_crossing(
    p: *const GpvPrimary,
    disc: *const GpvDiscretization,
    m: i32,
    n: u32,
    lo: f64,
    hi: f64,
    out: *mut GpvCrossing,
) -> GpvStatus {
    guard(|| {
        let out = out!(out);
        let (p, d) = (deref!(p), deref!(disc));
        let c = tri!(find_crossing(m, n, &p.0, (lo, hi), &d.0));
        *out = GpvCrossing {
            m: c.m,
            n: c.n,
            omega: c.omega,
            eigenvalue: c.eigenvalue,
            krein: c.krein.s,
            resonant: c.resonant as i32,
        };
        GpvStatus::Ok
    })
}

/// Curvature of the last crossing Ω ≈ 2 + Ω̃ a² and its mode (c₊, c₋).
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_last_bifurcation(m0: u32, out: *mut GpvLastBifurcation) -> GpvStatus {
    guard(|| {
        let out = out!(out);
        let lb = tri!(last_bifurcation(m0));
        *out = GpvLastBifurcation {
            omega_tilde: lb.omega_tilde,
            c_plus: lb.crossing_vector[0],
            c_minus: lb.crossing_vector[1],
        };
        GpvStatus::Ok
    })
}

/// First positive zero r0 of the two-mode radial profile.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gpv_polygon_radius(m0: u32, m: i32, n: u32, a: f64, b: f64, out: *mut f64) -> GpvStatus {
    guard(|| {
        let out = out!(out);
        *out = tri!(polygon_radius(m0, m, n, a, b)).r0;
        GpvStatus::Ok
    })
}
