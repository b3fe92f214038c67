//! C ABI for the lattice elastodynamics laboratory.
//!
//! Conventions:
//! * Handles are opaque pointers created by `*_new`-style constructors
//!   and released by the matching `*_free`; a NULL handle is always safe
//!   to free.
//! * Functions returning `int32_t` use status codes: 0 success,
//!   1 invalid argument, 2 precondition or hypothesis failure,
//!   3 numerical failure, 4 configuration error. The message of the
//!   most recent failure on the current thread is available through
//!   `cblab_last_error`.
//! * Matrices are row-major `double` buffers: a deformation gradient is
//!   `dim * dim` entries.

use cblab::harness::{
    run_convergence_study, run_garding_study, run_residual_study, run_simulate,
    run_stability_map, RunOptions, ScenarioConfig,
};
use cblab::lattice::{DomainDescriptor, DomainShape, InteractionStencil, LatticeDomain};
use cblab::potential::{JetOrder, PairKind, PotentialKind, SitePotential};
use cblab::stability::{
    lambda_atom_fourier, lambda_eps, lambda_lh, CoefficientField, FourierOptions,
    StabilityTensor,
};
use std::cell::RefCell;
use std::os::raw::c_char;
use std::sync::Arc;

pub const CBLAB_OK: i32 = 0;
pub const CBLAB_INVALID_ARGUMENT: i32 = 1;
pub const CBLAB_PRECONDITION_FAILED: i32 = 2;
pub const CBLAB_NUMERICAL_FAILURE: i32 = 3;
pub const CBLAB_CONFIG_ERROR: i32 = 4;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &cblab::Error) -> i32 {
    set_error(err.to_string());
    err.exit_code()
}

/// An interaction range handle.
pub struct CblabStencil {
    inner: Arc<InteractionStencil>,
}

/// A lattice domain handle (sites, index sets, spacing).
pub struct CblabDomain {
    inner: Arc<LatticeDomain>,
}

/// A site-potential handle.
pub struct CblabPotential {
    inner: Arc<SitePotential>,
}

/// Copy the most recent error message of this thread into `buf`
/// (truncated to `cap - 1` bytes, always NUL-terminated when `cap > 0`).
/// Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn cblab_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Nearest-neighbor interaction range in `dim` dimensions (1..=3).
/// Returns NULL on invalid input.
#[no_mangle]
pub extern "C" fn cblab_stencil_nearest(dim: usize) -> *mut CblabStencil {
    if !(1..=3).contains(&dim) {
        set_error(format!("dimension {dim} not in 1..=3"));
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(CblabStencil { inner: Arc::new(InteractionStencil::nearest(dim)) }))
}

/// Nearest plus next-nearest interaction range.
#[no_mangle]
pub extern "C" fn cblab_stencil_next_nearest(dim: usize) -> *mut CblabStencil {
    if !(1..=3).contains(&dim) {
        set_error(format!("dimension {dim} not in 1..=3"));
        return std::ptr::null_mut();
    }
    Box::into_raw(Box::new(CblabStencil {
        inner: Arc::new(InteractionStencil::next_nearest(dim)),
    }))
}

/// # Safety
/// `s` must be a pointer previously returned by a stencil constructor,
/// or NULL.
#[no_mangle]
pub unsafe extern "C" fn cblab_stencil_free(s: *mut CblabStencil) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(unsafe { std::slice::from_raw_parts(ptr, len) })
    }
}

/// Build an axis-aligned box domain at lattice spacing `eps`.
/// `lo` and `hi` are `dim` entries each.
///
/// # Safety
/// `lo`/`hi` must point to `dim` doubles, `stencil` must be a live
/// stencil handle, `out` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn cblab_domain_box(
    dim: usize,
    lo: *const f64,
    hi: *const f64,
    eps: f64,
    stencil: *const CblabStencil,
    out: *mut *mut CblabDomain,
) -> i32 {
    if out.is_null() || stencil.is_null() {
        set_error("NULL argument");
        return CBLAB_INVALID_ARGUMENT;
    }
    let (lo, hi) = match (unsafe { slice_arg(lo, dim) }, unsafe { slice_arg(hi, dim) }) {
        (Some(a), Some(b)) => (a.to_vec(), b.to_vec()),
        _ => {
            set_error("NULL corner pointer");
            return CBLAB_INVALID_ARGUMENT;
        }
    };
    let st = unsafe { &*stencil };
    let desc = match DomainDescriptor::new(dim, DomainShape::Box { lo, hi }) {
        Ok(d) => d,
        Err(e) => return status_of(&e),
    };
    match LatticeDomain::build(desc, eps, (*st.inner).clone()) {
        Ok(d) => {
            unsafe { *out = Box::into_raw(Box::new(CblabDomain { inner: Arc::new(d) })) };
            CBLAB_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Build a ball domain at lattice spacing `eps`.
///
/// # Safety
/// `center` must point to `dim` doubles; `stencil` and `out` as in
/// `cblab_domain_box`.
#[no_mangle]
pub unsafe extern "C" fn cblab_domain_ball(
    dim: usize,
    center: *const f64,
    radius: f64,
    eps: f64,
    stencil: *const CblabStencil,
    out: *mut *mut CblabDomain,
) -> i32 {
    if out.is_null() || stencil.is_null() {
        set_error("NULL argument");
        return CBLAB_INVALID_ARGUMENT;
    }
    let center = match unsafe { slice_arg(center, dim) } {
        Some(c) => c.to_vec(),
        None => {
            set_error("NULL center pointer");
            return CBLAB_INVALID_ARGUMENT;
        }
    };
    let st = unsafe { &*stencil };
    let desc = match DomainDescriptor::new(dim, DomainShape::Ball { center, radius }) {
        Ok(d) => d,
        Err(e) => return status_of(&e),
    };
    match LatticeDomain::build(desc, eps, (*st.inner).clone()) {
        Ok(d) => {
            unsafe { *out = Box::into_raw(Box::new(CblabDomain { inner: Arc::new(d) })) };
            CBLAB_OK
        }
        Err(e) => status_of(&e),
    }
}

/// # Safety
/// `d` must be a domain handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cblab_domain_free(d: *mut CblabDomain) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// # Safety
/// `d` must be a live domain handle.
#[no_mangle]
pub unsafe extern "C" fn cblab_domain_site_count(d: *const CblabDomain) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { &*d }.inner.site_count()
}

/// # Safety
/// `d` must be a live domain handle.
#[no_mangle]
pub unsafe extern "C" fn cblab_domain_interior_count(d: *const CblabDomain) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { &*d }.inner.interior().len()
}

/// # Safety
/// `d` must be a live domain handle.
#[no_mangle]
pub unsafe extern "C" fn cblab_domain_semi_interior_count(d: *const CblabDomain) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { &*d }.inner.semi_interior().len()
}

/// # Safety
/// `d` must be a live domain handle.
#[no_mangle]
pub unsafe extern "C" fn cblab_domain_boundary_count(d: *const CblabDomain) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { &*d }.inner.boundary_layer().len()
}

/// Harmonic site potential W(A) = 1/2 sum |A_rho|^2.
///
/// # Safety
/// `stencil` must be a live stencil handle.
#[no_mangle]
pub unsafe extern "C" fn cblab_potential_harmonic(
    stencil: *const CblabStencil,
) -> *mut CblabPotential {
    if stencil.is_null() {
        set_error("NULL stencil");
        return std::ptr::null_mut();
    }
    let st = unsafe { &*stencil };
    Box::into_raw(Box::new(CblabPotential {
        inner: Arc::new(SitePotential::harmonic(st.inner.clone())),
    }))
}

/// Lennard-Jones pair potential with bond-length floor `r_min`.
///
/// # Safety
/// `stencil` must be a live stencil handle.
#[no_mangle]
pub unsafe extern "C" fn cblab_potential_lennard_jones(
    stencil: *const CblabStencil,
    well_depth: f64,
    sigma: f64,
    r_min: f64,
) -> *mut CblabPotential {
    if stencil.is_null() {
        set_error("NULL stencil");
        return std::ptr::null_mut();
    }
    let st = unsafe { &*stencil };
    Box::into_raw(Box::new(CblabPotential {
        inner: Arc::new(SitePotential::new(
            st.inner.clone(),
            PotentialKind::Pair(PairKind::LennardJones { well_depth, sigma }),
            r_min,
        )),
    }))
}

/// Morse pair potential with bond-length floor `r_min`.
///
/// # Safety
/// `stencil` must be a live stencil handle.
#[no_mangle]
pub unsafe extern "C" fn cblab_potential_morse(
    stencil: *const CblabStencil,
    depth: f64,
    stiffness: f64,
    r_eq: f64,
    r_min: f64,
) -> *mut CblabPotential {
    if stencil.is_null() {
        set_error("NULL stencil");
        return std::ptr::null_mut();
    }
    let st = unsafe { &*stencil };
    Box::into_raw(Box::new(CblabPotential {
        inner: Arc::new(SitePotential::new(
            st.inner.clone(),
            PotentialKind::Pair(PairKind::Morse { depth, stiffness, r_eq }),
            r_min,
        )),
    }))
}

/// # Safety
/// `p` must be a potential handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cblab_potential_free(p: *mut CblabPotential) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Cauchy-Born energy density at a row-major `dim x dim` deformation
/// gradient; optionally its gradient (`dim * dim` buffer) when
/// `out_gradient` is non-NULL.
///
/// # Safety
/// `potential` must be live; `f` must point to `dim*dim` doubles;
/// `out_value` must be valid; `out_gradient` must be NULL or point to
/// `dim*dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cblab_cauchy_born(
    potential: *const CblabPotential,
    f: *const f64,
    out_value: *mut f64,
    out_gradient: *mut f64,
) -> i32 {
    if potential.is_null() || out_value.is_null() {
        set_error("NULL argument");
        return CBLAB_INVALID_ARGUMENT;
    }
    let pot = unsafe { &*potential };
    let d = pot.inner.dim();
    let f = match unsafe { slice_arg(f, d * d) } {
        Some(f) => f,
        None => {
            set_error("NULL gradient pointer");
            return CBLAB_INVALID_ARGUMENT;
        }
    };
    let order = if out_gradient.is_null() { JetOrder::Value } else { JetOrder::Gradient };
    match pot.inner.eval_cauchy_born(f, order) {
        Ok(jet) => {
            unsafe { *out_value = jet.value };
            if !out_gradient.is_null() {
                let g = jet.gradient.expect("gradient requested");
                unsafe { std::ptr::copy_nonoverlapping(g.as_ptr(), out_gradient, d * d) };
            }
            CBLAB_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Rank-one (acoustic) stability constant of the Cauchy-Born density at
/// a deformation gradient.
///
/// # Safety
/// `potential` live; `f` points to `dim*dim` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cblab_lambda_lh(
    potential: *const CblabPotential,
    f: *const f64,
    out: *mut f64,
) -> i32 {
    if potential.is_null() || out.is_null() {
        set_error("NULL argument");
        return CBLAB_INVALID_ARGUMENT;
    }
    let pot = unsafe { &*potential };
    let d = pot.inner.dim();
    let f = match unsafe { slice_arg(f, d * d) } {
        Some(f) => f,
        None => {
            set_error("NULL gradient pointer");
            return CBLAB_INVALID_ARGUMENT;
        }
    };
    match lambda_lh(&pot.inner, f) {
        Ok(rep) => {
            unsafe { *out = rep.value };
            CBLAB_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Wave-vector stability constant of the site-potential Hessian along a
/// homogeneous deformation; optionally the minimizing wave vector
/// (3 doubles) when `out_k` is non-NULL.
///
/// # Safety
/// `potential` live; `f` points to `dim*dim` doubles; `out` valid;
/// `out_k` NULL or 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cblab_lambda_atom(
    potential: *const CblabPotential,
    f: *const f64,
    out: *mut f64,
    out_k: *mut f64,
) -> i32 {
    if potential.is_null() || out.is_null() {
        set_error("NULL argument");
        return CBLAB_INVALID_ARGUMENT;
    }
    let pot = unsafe { &*potential };
    let d = pot.inner.dim();
    let f = match unsafe { slice_arg(f, d * d) } {
        Some(f) => f,
        None => {
            set_error("NULL gradient pointer");
            return CBLAB_INVALID_ARGUMENT;
        }
    };
    let tensor = match StabilityTensor::from_deformation(&pot.inner, f) {
        Ok(t) => t,
        Err(e) => return status_of(&e),
    };
    match lambda_atom_fourier(&tensor, &FourierOptions::default()) {
        Ok(rep) => {
            unsafe { *out = rep.value };
            if !out_k.is_null() {
                unsafe { std::ptr::copy_nonoverlapping(rep.k_min.as_ptr(), out_k, 3) };
            }
            CBLAB_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Finite-lattice stability constant of the site-potential Hessian along
/// a homogeneous deformation, on a concrete domain.
///
/// # Safety
/// `potential` and `domain` live; `f` points to `dim*dim` doubles;
/// `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cblab_lambda_eps(
    potential: *const CblabPotential,
    f: *const f64,
    domain: *const CblabDomain,
    seed: u64,
    out: *mut f64,
) -> i32 {
    if potential.is_null() || domain.is_null() || out.is_null() {
        set_error("NULL argument");
        return CBLAB_INVALID_ARGUMENT;
    }
    let pot = unsafe { &*potential };
    let dom = unsafe { &*domain };
    let d = pot.inner.dim();
    let f = match unsafe { slice_arg(f, d * d) } {
        Some(f) => f,
        None => {
            set_error("NULL gradient pointer");
            return CBLAB_INVALID_ARGUMENT;
        }
    };
    let tensor = match StabilityTensor::from_deformation(&pot.inner, f) {
        Ok(t) => t,
        Err(e) => return status_of(&e),
    };
    match lambda_eps(&CoefficientField::Constant(&tensor), &dom.inner, seed) {
        Ok(rep) => {
            unsafe { *out = rep.value };
            CBLAB_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Study selector for `cblab_run_study`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum CblabStudy {
    Simulate = 0,
    Residual = 1,
    Converge = 2,
    StabilityMap = 3,
    Garding = 4,
}

/// Run one experiment from a scenario configuration (JSON text, as
/// documented by schema/scenario.schema.json). CSV files are written to
/// `out_dir` when non-NULL, else to the config's `output_dir`.
/// `threads` = 0 uses all cores.
///
/// # Safety
/// `config_json` must be a NUL-terminated UTF-8 string; `out_dir` NULL
/// or likewise.
#[no_mangle]
pub unsafe extern "C" fn cblab_run_study(
    study: CblabStudy,
    config_json: *const c_char,
    out_dir: *const c_char,
    seed: u64,
    threads: usize,
) -> i32 {
    if config_json.is_null() {
        set_error("NULL config");
        return CBLAB_INVALID_ARGUMENT;
    }
    let text = match unsafe { std::ffi::CStr::from_ptr(config_json) }.to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config is not valid UTF-8");
            return CBLAB_INVALID_ARGUMENT;
        }
    };
    let cfg = match ScenarioConfig::from_json(text) {
        Ok(c) => c,
        Err(e) => return status_of(&e),
    };
    let mut opts = RunOptions::from_config(&cfg);
    opts.seed = seed;
    opts.quiet = true;
    if threads > 0 {
        opts.threads = Some(threads);
    }
    if !out_dir.is_null() {
        match unsafe { std::ffi::CStr::from_ptr(out_dir) }.to_str() {
            Ok(dir) => opts.out_dir = std::path::PathBuf::from(dir),
            Err(_) => {
                set_error("out_dir is not valid UTF-8");
                return CBLAB_INVALID_ARGUMENT;
            }
        }
    }
    let result = match study {
        CblabStudy::Simulate => run_simulate(&cfg, &opts),
        CblabStudy::Residual => run_residual_study(&cfg, &opts).map(|_| ()),
        CblabStudy::Converge => run_convergence_study(&cfg, &opts).map(|_| ()),
        CblabStudy::StabilityMap => run_stability_map(&cfg, &opts).map(|_| ()),
        CblabStudy::Garding => run_garding_study(&cfg, &opts).map(|_| ()),
    };
    match result {
        Ok(()) => CBLAB_OK,
        Err(e) => status_of(&e),
    }
}
