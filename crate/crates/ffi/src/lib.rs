//! C ABI for the bubble-tower crate.
//!
//! Objects cross the boundary as opaque handles (`BtParams`, `BtTower`,
//! `BtSolution`) created and released by matching `_new`/`_free` calls;
//! every fallible function returns a [`BtStatus`] and writes its result
//! through out-pointers.  A thread-local message describing the most
//! recent failure is available via [`bt_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use bubble_tower::error::Error;
use bubble_tower::kernel;
use bubble_tower::newton::{self, SolutionReport, SolveOptions};
use bubble_tower::quad;
use bubble_tower::scales::LambdaPair;
use bubble_tower::spectrum::{self, KMax, SystemParams};
use bubble_tower::tower::TowerProfile;

/// Result of a call across the C boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtStatus {
    BtOk = 0,
    BtNullPointer = 1,
    BtInvalidArgument = 2,
    BtNonConvergence = 3,
    BtNumericalError = 4,
    BtInternalError = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> BtStatus {
    match err {
        Error::Validation(_) => BtStatus::BtInvalidArgument,
        Error::NonConvergence(_) => BtStatus::BtNonConvergence,
        Error::Numerical(_) => BtStatus::BtNumericalError,
        Error::Internal(_) => BtStatus::BtInternalError,
    }
}

fn fail(err: Error) -> BtStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Message describing the most recent error on this thread.
///
/// The pointer stays valid until the next failing call on the same
/// thread; the string is empty if no error has occurred.
#[no_mangle]
pub extern "C" fn bt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Coupling parameters handle.
pub struct BtParams {
    inner: SystemParams,
}

/// Tower profile handle.
pub struct BtTower {
    inner: TowerProfile,
}

/// Newton solution handle.
pub struct BtSolution {
    inner: SolutionReport,
}

macro_rules! nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error("null pointer argument");
                return BtStatus::BtNullPointer;
            }
        }
    };
}

macro_rules! out_ptr {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => {
                set_error("null out-pointer");
                return BtStatus::BtNullPointer;
            }
        }
    };
}

/// Create a parameter handle; fails on nonpositive entries.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn bt_params_new(
    a: f64,
    b: f64,
    alpha1: f64,
    alpha2: f64,
    out: *mut *mut BtParams,
) -> BtStatus {
    let out = out_ptr!(out);
    match SystemParams::new(a, b, alpha1, alpha2) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(BtParams { inner }));
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `params` must come from [`bt_params_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bt_params_free(params: *mut BtParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Maximal tower height; when infinite, `*out_is_infinite` is set and
/// `*out_kmax` is untouched.
///
/// # Safety
/// All pointers must be valid; `params` from [`bt_params_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_kmax(
    params: *const BtParams,
    out_kmax: *mut u32,
    out_is_infinite: *mut bool,
) -> BtStatus {
    let params = nonnull!(params);
    let out_inf = out_ptr!(out_is_infinite);
    match spectrum::compute_kmax(&params.inner) {
        KMax::Finite(m) => {
            let out_kmax = out_ptr!(out_kmax);
            *out_kmax = m;
            *out_inf = false;
        }
        KMax::Infinite => *out_inf = true,
    }
    BtStatus::BtOk
}

/// Write `beta_1..beta_k` into a caller-provided buffer of length `k`.
///
/// # Safety
/// `out` must point to at least `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bt_betas(params: *const BtParams, k: u32, out: *mut f64) -> BtStatus {
    let params = nonnull!(params);
    if out.is_null() {
        set_error("null out-pointer");
        return BtStatus::BtNullPointer;
    }
    match spectrum::compute_betas(&params.inner, k) {
        Ok(betas) => {
            for (i, &v) in betas.betas().iter().enumerate() {
                unsafe { *out.add(i) = v };
            }
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// Local masses at height `k`, divided by `2 pi`.
///
/// # Safety
/// All pointers valid; `params` from [`bt_params_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_masses(
    params: *const BtParams,
    k: u32,
    out_m1_over_2pi: *mut f64,
    out_m2_over_2pi: *mut f64,
) -> BtStatus {
    let params = nonnull!(params);
    let out1 = out_ptr!(out_m1_over_2pi);
    let out2 = out_ptr!(out_m2_over_2pi);
    let betas = match spectrum::compute_betas(&params.inner, k) {
        Ok(b) => b,
        Err(e) => return fail(e),
    };
    match bubble_tower::masses::local_masses(&betas, k) {
        Ok(m) => {
            *out1 = m.m1_over_2pi;
            *out2 = m.m2_over_2pi;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// Minimal rotation order required of the domain at height `k`.
///
/// # Safety
/// All pointers valid; `params` from [`bt_params_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_symmetry_order(
    params: *const BtParams,
    k: u32,
    out_m: *mut u64,
) -> BtStatus {
    let params = nonnull!(params);
    let out = out_ptr!(out_m);
    match spectrum::compute_betas(&params.inner, k) {
        Ok(betas) => {
            *out = bubble_tower::masses::symmetry_order(betas.betas()).m;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// Build a tower of height `k` at the given `log10` lambdas.
///
/// # Safety
/// `params` from [`bt_params_new`]; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bt_tower_new(
    params: *const BtParams,
    k: u32,
    log10_lambda1: f64,
    log10_lambda2: f64,
    out: *mut *mut BtTower,
) -> BtStatus {
    let params = nonnull!(params);
    let out = out_ptr!(out);
    let lambda = match LambdaPair::from_log10(log10_lambda1, log10_lambda2) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    match TowerProfile::new(params.inner, k, lambda) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(BtTower { inner }));
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `tower` must come from [`bt_tower_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bt_tower_free(tower: *mut BtTower) {
    if !tower.is_null() {
        drop(unsafe { Box::from_raw(tower) });
    }
}

/// `ln delta_ell` of the tower, 1-based index.
///
/// # Safety
/// All pointers valid; `tower` from [`bt_tower_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_tower_log_delta(
    tower: *const BtTower,
    ell: u32,
    out: *mut f64,
) -> BtStatus {
    let tower = nonnull!(tower);
    let out = out_ptr!(out);
    if ell < 1 || ell > tower.inner.k() {
        set_error("bubble index out of range");
        return BtStatus::BtInvalidArgument;
    }
    *out = tower.inner.scales().log_delta(ell);
    BtStatus::BtOk
}

/// Both components of the main term at `log_r <= 0`.
///
/// # Safety
/// All pointers valid; `tower` from [`bt_tower_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_tower_main_term(
    tower: *const BtTower,
    log_r: f64,
    out_w1: *mut f64,
    out_w2: *mut f64,
) -> BtStatus {
    let tower = nonnull!(tower);
    let out1 = out_ptr!(out_w1);
    let out2 = out_ptr!(out_w2);
    match tower.inner.main_term(log_r) {
        Ok((w1, w2)) => {
            *out1 = w1;
            *out2 = w2;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// `Theta_ell` at scaled log radius `log_y`.
///
/// # Safety
/// All pointers valid; `tower` from [`bt_tower_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_tower_theta(
    tower: *const BtTower,
    ell: u32,
    log_y: f64,
    out: *mut f64,
) -> BtStatus {
    let tower = nonnull!(tower);
    let out = out_ptr!(out);
    match tower.inner.theta(ell, log_y) {
        Ok(v) => {
            *out = v;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// Analytic residual of the main term at `log_r`, per component, as a
/// signed log magnitude (`sign` in {-1, 0, 1}).
///
/// # Safety
/// All pointers valid; `tower` from [`bt_tower_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_tower_residual(
    tower: *const BtTower,
    log_r: f64,
    out_log_abs_r1: *mut f64,
    out_sign_r1: *mut i8,
    out_log_abs_r2: *mut f64,
    out_sign_r2: *mut i8,
) -> BtStatus {
    let tower = nonnull!(tower);
    let l1 = out_ptr!(out_log_abs_r1);
    let s1 = out_ptr!(out_sign_r1);
    let l2 = out_ptr!(out_log_abs_r2);
    let s2 = out_ptr!(out_sign_r2);
    match tower.inner.residual(log_r) {
        Ok((r1, r2)) => {
            *l1 = r1.log_abs;
            *s1 = r1.sign;
            *l2 = r2.log_abs;
            *s2 = r2.sign;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// `lambda_i integral_{B_rcut} h_i e^{W_i}` by quadrature.
///
/// # Safety
/// All pointers valid; `tower` from [`bt_tower_new`].
#[no_mangle]
pub unsafe extern "C" fn bt_tower_local_mass(
    tower: *const BtTower,
    component: u8,
    log_r_cut: f64,
    out: *mut f64,
) -> BtStatus {
    let tower = nonnull!(tower);
    let out = out_ptr!(out);
    match quad::local_mass_quadrature(&tower.inner, component, log_r_cut) {
        Ok(v) => {
            *out = v;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// The two log-weighted kernel integrals (`-2 pi beta` and `-4 pi`).
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_step4_identities(
    beta: f64,
    out_first: *mut f64,
    out_second: *mut f64,
) -> BtStatus {
    let out1 = out_ptr!(out_first);
    let out2 = out_ptr!(out_second);
    match quad::step4_identities(beta) {
        Ok((a, b)) => {
            *out1 = a;
            *out2 = b;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// Whole-plane bubble mass (`4 pi beta`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_bubble_mass(beta: f64, log_delta: f64, out: *mut f64) -> BtStatus {
    let out = out_ptr!(out);
    match quad::bubble_mass(beta, log_delta) {
        Ok(v) => {
            *out = v;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// Number of bounded kernel modes compatible with `m`-fold symmetry.
///
/// # Safety
/// `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bt_kernel_mode_count(
    alpha: f64,
    m: u32,
    out_count: *mut u32,
) -> BtStatus {
    let out = out_ptr!(out_count);
    match kernel::bounded_modes(alpha, m) {
        Ok(modes) => {
            *out = modes.len() as u32;
            BtStatus::BtOk
        }
        Err(e) => fail(e),
    }
}

/// Full Newton solve; `nodes_per_unit <= 0` selects the default (100).
///
/// A solve that runs out of iterations still produces a solution handle
/// and returns `BtNonConvergence`; inspect it or free it as usual.
///
/// # Safety
/// `params` from [`bt_params_new`]; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bt_newton_solve(
    params: *const BtParams,
    k: u32,
    log10_lambda1: f64,
    log10_lambda2: f64,
    nodes_per_unit: f64,
    out: *mut *mut BtSolution,
) -> BtStatus {
    let params = nonnull!(params);
    let out = out_ptr!(out);
    let lambda = match LambdaPair::from_log10(log10_lambda1, log10_lambda2) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    let mut opts = SolveOptions::default();
    if nodes_per_unit > 0.0 {
        opts.nodes_per_unit = nodes_per_unit;
    }
    match newton::solve(&params.inner, k, lambda, &opts) {
        Ok(report) => {
            let converged = report.converged;
            *out = Box::into_raw(Box::new(BtSolution { inner: report }));
            if converged {
                BtStatus::BtOk
            } else {
                set_error("Newton solver did not reach the requested tolerance");
                BtStatus::BtNonConvergence
            }
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `solution` must come from [`bt_newton_solve`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bt_solution_free(solution: *mut BtSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Scalar summary of a solve: convergence flag, iteration count, final
/// residual, recovered masses over `2 pi` and remainder sups.
///
/// # Safety
/// All pointers valid; `solution` from [`bt_newton_solve`].
#[no_mangle]
pub unsafe extern "C" fn bt_solution_summary(
    solution: *const BtSolution,
    out_converged: *mut bool,
    out_iterations: *mut u32,
    out_final_residual: *mut f64,
    out_m1_over_2pi: *mut f64,
    out_m2_over_2pi: *mut f64,
    out_phi_sup1: *mut f64,
    out_phi_sup2: *mut f64,
) -> BtStatus {
    let solution = nonnull!(solution);
    let r = &solution.inner;
    *out_ptr!(out_converged) = r.converged;
    *out_ptr!(out_iterations) = r.iterations;
    *out_ptr!(out_final_residual) = r.final_residual;
    *out_ptr!(out_m1_over_2pi) = r.masses.m1_over_2pi;
    *out_ptr!(out_m2_over_2pi) = r.masses.m2_over_2pi;
    *out_ptr!(out_phi_sup1) = r.phi_sup[0];
    *out_ptr!(out_phi_sup2) = r.phi_sup[1];
    BtStatus::BtOk
}

/// Number of grid nodes in a solution.
///
/// # Safety
/// All pointers valid; `solution` from [`bt_newton_solve`].
#[no_mangle]
pub unsafe extern "C" fn bt_solution_len(solution: *const BtSolution, out: *mut usize) -> BtStatus {
    let solution = nonnull!(solution);
    *out_ptr!(out) = solution.inner.s.len();
    BtStatus::BtOk
}

/// Copy grid and solution columns into caller buffers of length `len`
/// (from [`bt_solution_len`]).  Any output pointer may be null to skip
/// that column.
///
/// # Safety
/// Non-null pointers must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bt_solution_profile(
    solution: *const BtSolution,
    len: usize,
    out_s: *mut f64,
    out_u1: *mut f64,
    out_u2: *mut f64,
) -> BtStatus {
    let solution = nonnull!(solution);
    let r = &solution.inner;
    if len != r.s.len() {
        set_error("buffer length does not match bt_solution_len");
        return BtStatus::BtInvalidArgument;
    }
    unsafe {
        if !out_s.is_null() {
            std::ptr::copy_nonoverlapping(r.s.as_ptr(), out_s, len);
        }
        if !out_u1.is_null() {
            std::ptr::copy_nonoverlapping(r.u1.as_ptr(), out_u1, len);
        }
        if !out_u2.is_null() {
            std::ptr::copy_nonoverlapping(r.u2.as_ptr(), out_u2, len);
        }
    }
    BtStatus::BtOk
}
