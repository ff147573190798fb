//! Exercises the C ABI from the Rust side: happy paths, error statuses
//! and the null-pointer guards.

use std::ffi::CStr;
use std::ptr;

use bubble_tower_ffi::*;

fn params(a: f64, b: f64, a1: f64, a2: f64) -> *mut BtParams {
    let mut p: *mut BtParams = ptr::null_mut();
    let st = unsafe { bt_params_new(a, b, a1, a2, &mut p) };
    assert_eq!(st, BtStatus::BtOk);
    assert!(!p.is_null());
    p
}

#[test]
fn kmax_and_betas_and_masses() {
    let p = params(1.0, 2.0, 2.0, 2.0);
    let mut kmax = 0u32;
    let mut inf = true;
    assert_eq!(unsafe { bt_kmax(p, &mut kmax, &mut inf) }, BtStatus::BtOk);
    assert!(!inf);
    assert_eq!(kmax, 4);

    let mut betas = [0.0f64; 4];
    assert_eq!(unsafe { bt_betas(p, 4, betas.as_mut_ptr()) }, BtStatus::BtOk);
    assert_eq!(betas, [2.0, 6.0, 4.0, 2.0]);

    let (mut m1, mut m2) = (0.0, 0.0);
    assert_eq!(unsafe { bt_masses(p, 4, &mut m1, &mut m2) }, BtStatus::BtOk);
    assert_eq!((m1, m2), (6.0, 8.0));

    let mut order = 0u64;
    assert_eq!(unsafe { bt_symmetry_order(p, 4, &mut order) }, BtStatus::BtOk);
    assert_eq!(order, 4);

    unsafe { bt_params_free(p) };
}

#[test]
fn infinite_kmax_flag() {
    let p = params(2.0, 2.0, 2.0, 2.0);
    let mut kmax = 77u32;
    let mut inf = false;
    assert_eq!(unsafe { bt_kmax(p, &mut kmax, &mut inf) }, BtStatus::BtOk);
    assert!(inf);
    assert_eq!(kmax, 77); // untouched
    unsafe { bt_params_free(p) };
}

#[test]
fn invalid_params_set_message() {
    let mut p: *mut BtParams = ptr::null_mut();
    let st = unsafe { bt_params_new(-1.0, 1.0, 2.0, 2.0, &mut p) };
    assert_eq!(st, BtStatus::BtInvalidArgument);
    let msg = unsafe { CStr::from_ptr(bt_last_error_message()) };
    assert!(msg.to_str().unwrap().contains("positive"));
}

#[test]
fn null_guards() {
    let st = unsafe { bt_params_new(1.0, 1.0, 2.0, 2.0, ptr::null_mut()) };
    assert_eq!(st, BtStatus::BtNullPointer);
    let mut v = 0.0;
    assert_eq!(
        unsafe { bt_bubble_mass(2.0, 0.0, ptr::null_mut()) },
        BtStatus::BtNullPointer
    );
    assert_eq!(
        unsafe { bt_masses(ptr::null(), 1, &mut v, &mut v) },
        BtStatus::BtNullPointer
    );
    unsafe { bt_params_free(ptr::null_mut()) }; // harmless
    unsafe { bt_tower_free(ptr::null_mut()) };
    unsafe { bt_solution_free(ptr::null_mut()) };
}

#[test]
fn tower_roundtrip() {
    let p = params(1.0, 1.0, 2.0, 2.0);
    let mut t: *mut BtTower = ptr::null_mut();
    assert_eq!(
        unsafe { bt_tower_new(p, 2, -6.0, -6.0, &mut t) },
        BtStatus::BtOk
    );
    let (mut w1, mut w2) = (1.0, 1.0);
    assert_eq!(
        unsafe { bt_tower_main_term(t, 0.0, &mut w1, &mut w2) },
        BtStatus::BtOk
    );
    assert_eq!((w1, w2), (0.0, 0.0));

    let mut log_delta = 0.0;
    assert_eq!(unsafe { bt_tower_log_delta(t, 1, &mut log_delta) }, BtStatus::BtOk);
    assert!(log_delta < 0.0);
    assert_eq!(
        unsafe { bt_tower_log_delta(t, 9, &mut log_delta) },
        BtStatus::BtInvalidArgument
    );

    let mut theta = 0.0;
    assert_eq!(unsafe { bt_tower_theta(t, 1, 0.0, &mut theta) }, BtStatus::BtOk);
    assert!(theta.abs() < 0.1);

    let (mut l1, mut s1, mut l2, mut s2) = (0.0, 0i8, 0.0, 0i8);
    assert_eq!(
        unsafe { bt_tower_residual(t, -1.0, &mut l1, &mut s1, &mut l2, &mut s2) },
        BtStatus::BtOk
    );
    assert!(l1.is_finite() || s1 == 0);

    let mut mass = 0.0;
    assert_eq!(
        unsafe { bt_tower_local_mass(t, 1, 0.5f64.ln(), &mut mass) },
        BtStatus::BtOk
    );
    assert!((mass / (2.0 * std::f64::consts::PI) - 2.0).abs() < 0.1);
    assert_eq!(
        unsafe { bt_tower_local_mass(t, 3, 0.0, &mut mass) },
        BtStatus::BtInvalidArgument
    );

    // k beyond k_max is a validation failure
    let mut t2: *mut BtTower = ptr::null_mut();
    assert_eq!(
        unsafe { bt_tower_new(p, 9, -6.0, -6.0, &mut t2) },
        BtStatus::BtInvalidArgument
    );

    unsafe { bt_tower_free(t) };
    unsafe { bt_params_free(p) };
}

#[test]
fn quadrature_identities() {
    let (mut first, mut second) = (0.0, 0.0);
    assert_eq!(
        unsafe { bt_step4_identities(2.0, &mut first, &mut second) },
        BtStatus::BtOk
    );
    let pi = std::f64::consts::PI;
    assert!((first + 4.0 * pi).abs() < 1e-7);
    assert!((second + 4.0 * pi).abs() < 1e-7);

    let mut mass = 0.0;
    assert_eq!(unsafe { bt_bubble_mass(3.0, -20.0, &mut mass) }, BtStatus::BtOk);
    assert!((mass - 12.0 * pi).abs() < 1e-7);
    assert_eq!(
        unsafe { bt_bubble_mass(-3.0, 0.0, &mut mass) },
        BtStatus::BtInvalidArgument
    );

    let mut count = 0u32;
    assert_eq!(unsafe { bt_kernel_mode_count(2.0, 1, &mut count) }, BtStatus::BtOk);
    assert_eq!(count, 3);
    assert_eq!(unsafe { bt_kernel_mode_count(2.0, 3, &mut count) }, BtStatus::BtOk);
    assert_eq!(count, 1);
}

#[test]
fn newton_solve_roundtrip() {
    let p = params(1.0, 1.0, 2.0, 2.0);
    let mut sol: *mut BtSolution = ptr::null_mut();
    assert_eq!(
        unsafe { bt_newton_solve(p, 1, -6.0, -6.0, 0.0, &mut sol) },
        BtStatus::BtOk
    );
    let mut converged = false;
    let mut iterations = 0u32;
    let (mut resid, mut m1, mut m2, mut p1, mut p2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    assert_eq!(
        unsafe {
            bt_solution_summary(
                sol,
                &mut converged,
                &mut iterations,
                &mut resid,
                &mut m1,
                &mut m2,
                &mut p1,
                &mut p2,
            )
        },
        BtStatus::BtOk
    );
    assert!(converged);
    assert!(resid <= 1e-10);
    assert!((m1 - 2.0).abs() < 0.02);

    let mut len = 0usize;
    assert_eq!(unsafe { bt_solution_len(sol, &mut len) }, BtStatus::BtOk);
    assert!(len > 100);
    let mut s = vec![0.0; len];
    let mut u1 = vec![0.0; len];
    assert_eq!(
        unsafe { bt_solution_profile(sol, len, s.as_mut_ptr(), u1.as_mut_ptr(), ptr::null_mut()) },
        BtStatus::BtOk
    );
    assert_eq!(*s.last().unwrap(), 0.0);
    assert_eq!(*u1.last().unwrap(), 0.0);
    assert_eq!(
        unsafe { bt_solution_profile(sol, len - 1, s.as_mut_ptr(), ptr::null_mut(), ptr::null_mut()) },
        BtStatus::BtInvalidArgument
    );

    unsafe { bt_solution_free(sol) };
    unsafe { bt_params_free(p) };
}
