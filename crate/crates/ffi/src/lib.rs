//! C ABI for the beam-correlation library: opaque setup handles, status
//! codes, and a thread-local last-error message.
//!
//! The header `include/antibunch.h` mirrors this surface; regenerate it with
//! cbindgen (`cbindgen --config cbindgen.toml --output include/antibunch.h`)
//! after changing any exported signature. A unit test checks that every
//! exported symbol appears in the header.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CString};

use antibunch::collinear::{
    c_analytic, c_normalized, coherence_lengths, dip_depth, interference, rho1, CollinearSetup,
};
use antibunch::numerics::QuadSpec;
use antibunch::offaxis::{c_offaxis, c_symmetric_pair};
use antibunch::params::{BeamSpec, DetectorSpec, Method, SourceSpec, Statistics};
use antibunch::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbStatus {
    AbOk = 0,
    AbNullPointer = 1,
    AbInvalidParam = 2,
    AbDomainError = 3,
    AbConvergence = 4,
    AbFarField = 5,
    AbValidation = 6,
}

/// Opaque collinear measurement handle.
pub struct AbSetup {
    setup: CollinearSetup,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(cleaned).unwrap());
}

fn status_of(err: &Error) -> AbStatus {
    match err {
        Error::InvalidParam(_) | Error::UnitConversion(_) => AbStatus::AbInvalidParam,
        Error::Domain(_) => AbStatus::AbDomainError,
        Error::Convergence { .. } => AbStatus::AbConvergence,
        Error::FarField(_) => AbStatus::AbFarField,
        Error::Symmetry(_) | Error::Validation(_) => AbStatus::AbValidation,
    }
}

fn fail(err: Error) -> AbStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn statistics_from(code: c_int) -> Option<Statistics> {
    match code {
        0 => Some(Statistics::Fermion),
        1 => Some(Statistics::Boson),
        2 => Some(Statistics::Classical),
        _ => None,
    }
}

fn method_from(code: c_int) -> Option<Method> {
    match code {
        0 => Some(Method::Analytic),
        1 => Some(Method::GaussianApprox),
        2 => Some(Method::Numeric),
        _ => None,
    }
}

fn quad_with(rel_tol: c_double) -> QuadSpec {
    if rel_tol > 0.0 {
        QuadSpec::default().with_rel_tol(rel_tol)
    } else {
        QuadSpec::default().with_rel_tol(1e-6)
    }
}

/// Message describing the most recent error on this thread. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn ab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create a collinear setup. `statistics`: 0 fermion, 1 boson, 2 classical.
/// All quantities in natural units (lengths in units of w, so pass w = 1
/// unless deliberately rescaling). On success writes the handle to `out`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn ab_setup_new_collinear(
    w: c_double,
    w_z: c_double,
    beta: c_double,
    mu: c_double,
    mass: c_double,
    statistics: c_int,
    coupling: c_double,
    k0: c_double,
    dk_perp: c_double,
    dk_z: c_double,
    a: c_double,
    d: c_double,
    z1: c_double,
    z2: c_double,
    out: *mut *mut AbSetup,
) -> AbStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return AbStatus::AbNullPointer;
    }
    let Some(stats) = statistics_from(statistics) else {
        set_error("statistics must be 0 (fermion), 1 (boson) or 2 (classical)");
        return AbStatus::AbInvalidParam;
    };
    let src = match SourceSpec::new(w, w_z, beta, mu) {
        Ok(s) => {
            let mut s = s.with_statistics(stats).with_coupling(coupling);
            s.mass = mass;
            if let Err(e) = s.validate() {
                return fail(e);
            }
            s
        }
        Err(e) => return fail(e),
    };
    let beam = match BeamSpec::new(k0, dk_perp, dk_z) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let det = match DetectorSpec::new(a, d) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    match CollinearSetup::new(src, beam, det, z1, z2) {
        Ok(setup) => {
            unsafe { *out = Box::into_raw(Box::new(AbSetup { setup })) };
            AbStatus::AbOk
        }
        Err(e) => fail(e),
    }
}

/// Destroy a setup handle. Accepts null.
#[no_mangle]
pub extern "C" fn ab_setup_free(setup: *mut AbSetup) {
    if !setup.is_null() {
        drop(unsafe { Box::from_raw(setup) });
    }
}

/// Move the detectors of an existing setup.
#[no_mangle]
pub extern "C" fn ab_setup_set_z(setup: *mut AbSetup, z1: c_double, z2: c_double) -> AbStatus {
    let Some(handle) = (unsafe { setup.as_mut() }) else {
        set_error("setup pointer is null");
        return AbStatus::AbNullPointer;
    };
    if !(z1 > 0.0 && z2 > 0.0) {
        set_error("detector distances must be > 0");
        return AbStatus::AbInvalidParam;
    }
    handle.setup = handle.setup.with_z(z1, z2);
    AbStatus::AbOk
}

/// Closed-form normalized two-particle distribution C̄.
#[no_mangle]
pub extern "C" fn ab_c_analytic(setup: *const AbSetup, out: *mut c_double) -> AbStatus {
    let Some(handle) = (unsafe { setup.as_ref() }) else {
        set_error("setup pointer is null");
        return AbStatus::AbNullPointer;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AbStatus::AbNullPointer;
    }
    unsafe { *out = c_analytic(&handle.setup) };
    AbStatus::AbOk
}

/// Normalized two-particle distribution. `method`: 0 analytic, 1 gaussian
/// reduction, 2 full numeric. `rel_tol <= 0` selects the default (1e-6).
#[no_mangle]
pub extern "C" fn ab_c_normalized(
    setup: *const AbSetup,
    method: c_int,
    rel_tol: c_double,
    value: *mut c_double,
    abs_error: *mut c_double,
) -> AbStatus {
    let Some(handle) = (unsafe { setup.as_ref() }) else {
        set_error("setup pointer is null");
        return AbStatus::AbNullPointer;
    };
    if value.is_null() {
        set_error("value pointer is null");
        return AbStatus::AbNullPointer;
    }
    let Some(m) = method_from(method) else {
        set_error("method must be 0 (analytic), 1 (gauss) or 2 (numeric)");
        return AbStatus::AbInvalidParam;
    };
    match c_normalized(&handle.setup, m, &quad_with(rel_tol)) {
        Ok(c) => {
            unsafe {
                *value = c.value;
                if !abs_error.is_null() {
                    *abs_error = c.abs_error;
                }
            }
            AbStatus::AbOk
        }
        Err(e) => fail(e),
    }
}

/// Single-particle distribution at distance zbar (scales with coupling²).
#[no_mangle]
pub extern "C" fn ab_rho1(
    setup: *const AbSetup,
    zbar: c_double,
    method: c_int,
    rel_tol: c_double,
    value: *mut c_double,
    abs_error: *mut c_double,
) -> AbStatus {
    let Some(handle) = (unsafe { setup.as_ref() }) else {
        set_error("setup pointer is null");
        return AbStatus::AbNullPointer;
    };
    if value.is_null() {
        set_error("value pointer is null");
        return AbStatus::AbNullPointer;
    }
    let Some(m) = method_from(method) else {
        set_error("method must be 0, 1 or 2");
        return AbStatus::AbInvalidParam;
    };
    match rho1(&handle.setup, zbar, m, &quad_with(rel_tol)) {
        Ok(r) => {
            unsafe {
                *value = r.value;
                if !abs_error.is_null() {
                    *abs_error = r.abs_error;
                }
            }
            AbStatus::AbOk
        }
        Err(e) => fail(e),
    }
}

/// Interference term (scales with coupling⁴).
#[no_mangle]
pub extern "C" fn ab_interference(
    setup: *const AbSetup,
    method: c_int,
    rel_tol: c_double,
    value: *mut c_double,
    abs_error: *mut c_double,
) -> AbStatus {
    let Some(handle) = (unsafe { setup.as_ref() }) else {
        set_error("setup pointer is null");
        return AbStatus::AbNullPointer;
    };
    if value.is_null() {
        set_error("value pointer is null");
        return AbStatus::AbNullPointer;
    }
    let Some(m) = method_from(method) else {
        set_error("method must be 0, 1 or 2");
        return AbStatus::AbInvalidParam;
    };
    match interference(&handle.setup, m, &quad_with(rel_tol)) {
        Ok(r) => {
            unsafe {
                *value = r.value;
                if !abs_error.is_null() {
                    *abs_error = r.abs_error;
                }
            }
            AbStatus::AbOk
        }
        Err(e) => fail(e),
    }
}

/// Dip depth 1 − C̄ at zero separation (closed form).
#[no_mangle]
pub extern "C" fn ab_dip_depth_analytic(setup: *const AbSetup, out: *mut c_double) -> AbStatus {
    let Some(handle) = (unsafe { setup.as_ref() }) else {
        set_error("setup pointer is null");
        return AbStatus::AbNullPointer;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return AbStatus::AbNullPointer;
    }
    match dip_depth(&handle.setup, Method::Analytic, &QuadSpec::default()) {
        Ok(v) => {
            unsafe { *out = v };
            AbStatus::AbOk
        }
        Err(e) => fail(e),
    }
}

/// Lateral and longitudinal coherence lengths of the setup.
#[no_mangle]
pub extern "C" fn ab_coherence_lengths(
    setup: *const AbSetup,
    lateral: *mut c_double,
    longitudinal: *mut c_double,
) -> AbStatus {
    let Some(handle) = (unsafe { setup.as_ref() }) else {
        set_error("setup pointer is null");
        return AbStatus::AbNullPointer;
    };
    if lateral.is_null() || longitudinal.is_null() {
        set_error("output pointer is null");
        return AbStatus::AbNullPointer;
    }
    let (lat, lon) = coherence_lengths(&handle.setup);
    unsafe {
        *lateral = lat;
        *longitudinal = lon;
    }
    AbStatus::AbOk
}

/// Closed-form off-axis C̄ for detectors at polar angle theta_d on opposite
/// sides of the axis, radii r1 and r2. Standalone: the closed form carries
/// no state.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn ab_c_offaxis(
    theta_d: c_double,
    r1: c_double,
    r2: c_double,
    w: c_double,
    w_z: c_double,
    k0: c_double,
    dk_perp: c_double,
    dk_z: c_double,
    a: c_double,
    d: c_double,
    statistics: c_int,
    out: *mut c_double,
) -> AbStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return AbStatus::AbNullPointer;
    }
    let Some(stats) = statistics_from(statistics) else {
        set_error("statistics must be 0, 1 or 2");
        return AbStatus::AbInvalidParam;
    };
    // β, μ don't enter the closed form; placeholders satisfy validation.
    let src = match SourceSpec::new(w, w_z, 1.0, 1.0) {
        Ok(s) => s.with_statistics(stats),
        Err(e) => return fail(e),
    };
    let beam = match BeamSpec::new(k0, dk_perp, dk_z) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let det = match DetectorSpec::new(a, d) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    if !(r1 > 0.0 && r2 > 0.0) {
        set_error("radial distances must be > 0");
        return AbStatus::AbInvalidParam;
    }
    unsafe { *out = c_offaxis(theta_d, r1, r2, &src, &beam, &det) };
    AbStatus::AbOk
}

/// Closed-form C̄ for the mirror pair r₁ = (x, y, z), r₂ = (−x, −y, z).
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub extern "C" fn ab_c_symmetric_pair(
    x: c_double,
    y: c_double,
    z: c_double,
    w: c_double,
    w_z: c_double,
    k0: c_double,
    dk_perp: c_double,
    dk_z: c_double,
    a: c_double,
    d: c_double,
    statistics: c_int,
    out: *mut c_double,
) -> AbStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return AbStatus::AbNullPointer;
    }
    let Some(stats) = statistics_from(statistics) else {
        set_error("statistics must be 0, 1 or 2");
        return AbStatus::AbInvalidParam;
    };
    let src = match SourceSpec::new(w, w_z, 1.0, 1.0) {
        Ok(s) => s.with_statistics(stats),
        Err(e) => return fail(e),
    };
    let beam = match BeamSpec::new(k0, dk_perp, dk_z) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    let det = match DetectorSpec::new(a, d) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    if !(z > 0.0) {
        set_error("z must be > 0");
        return AbStatus::AbInvalidParam;
    }
    unsafe { *out = c_symmetric_pair(x, y, z, &src, &beam, &det) };
    AbStatus::AbOk
}
