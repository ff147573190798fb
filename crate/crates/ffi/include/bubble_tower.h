#ifndef BUBBLE_TOWER_H
#define BUBBLE_TOWER_H

/* Generated by cbindgen from the bubble-tower-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a call across the C boundary.
typedef enum {
  BT_OK = 0,
  BT_NULL_POINTER = 1,
  BT_INVALID_ARGUMENT = 2,
  BT_NON_CONVERGENCE = 3,
  BT_NUMERICAL_ERROR = 4,
  BT_INTERNAL_ERROR = 5,
} BtStatus;

// Coupling parameters handle.
typedef struct BtParams BtParams;

// Newton solution handle.
typedef struct BtSolution BtSolution;

// Tower profile handle.
typedef struct BtTower BtTower;

// Message describing the most recent error on this thread.
//
// The pointer stays valid until the next failing call on the same
// thread; the string is empty if no error has occurred.
const char *bt_last_error_message(void);

// Create a parameter handle; fails on nonpositive entries.
//
// # Safety
// `out` must point to writable storage for one pointer.
BtStatus bt_params_new(double a, double b, double alpha1, double alpha2, BtParams **out);

// # Safety
// `params` must come from [`bt_params_new`] and not have been freed.
void bt_params_free(BtParams *params);

// Maximal tower height; when infinite, `*out_is_infinite` is set and
// `*out_kmax` is untouched.
//
// # Safety
// All pointers must be valid; `params` from [`bt_params_new`].
BtStatus bt_kmax(const BtParams *params, uint32_t *out_kmax, bool *out_is_infinite);

// Write `beta_1..beta_k` into a caller-provided buffer of length `k`.
//
// # Safety
// `out` must point to at least `k` writable doubles.
BtStatus bt_betas(const BtParams *params, uint32_t k, double *out);

// Local masses at height `k`, divided by `2 pi`.
//
// # Safety
// All pointers valid; `params` from [`bt_params_new`].
BtStatus bt_masses(const BtParams *params,
                   uint32_t k,
                   double *out_m1_over_2pi,
                   double *out_m2_over_2pi);

// Minimal rotation order required of the domain at height `k`.
//
// # Safety
// All pointers valid; `params` from [`bt_params_new`].
BtStatus bt_symmetry_order(const BtParams *params, uint32_t k, uint64_t *out_m);

// Build a tower of height `k` at the given `log10` lambdas.
//
// # Safety
// `params` from [`bt_params_new`]; `out` writable.
BtStatus bt_tower_new(const BtParams *params,
                      uint32_t k,
                      double log10_lambda1,
                      double log10_lambda2,
                      BtTower **out);

// # Safety
// `tower` must come from [`bt_tower_new`] and not have been freed.
void bt_tower_free(BtTower *tower);

// `ln delta_ell` of the tower, 1-based index.
//
// # Safety
// All pointers valid; `tower` from [`bt_tower_new`].
BtStatus bt_tower_log_delta(const BtTower *tower, uint32_t ell, double *out);

// Both components of the main term at `log_r <= 0`.
//
// # Safety
// All pointers valid; `tower` from [`bt_tower_new`].
BtStatus bt_tower_main_term(const BtTower *tower, double log_r, double *out_w1, double *out_w2);

// `Theta_ell` at scaled log radius `log_y`.
//
// # Safety
// All pointers valid; `tower` from [`bt_tower_new`].
BtStatus bt_tower_theta(const BtTower *tower, uint32_t ell, double log_y, double *out);

// Analytic residual of the main term at `log_r`, per component, as a
// signed log magnitude (`sign` in {-1, 0, 1}).
//
// # Safety
// All pointers valid; `tower` from [`bt_tower_new`].
BtStatus bt_tower_residual(const BtTower *tower,
                           double log_r,
                           double *out_log_abs_r1,
                           int8_t *out_sign_r1,
                           double *out_log_abs_r2,
                           int8_t *out_sign_r2);

// `lambda_i integral_{B_rcut} h_i e^{W_i}` by quadrature.
//
// # Safety
// All pointers valid; `tower` from [`bt_tower_new`].
BtStatus bt_tower_local_mass(const BtTower *tower,
                             uint8_t component,
                             double log_r_cut,
                             double *out);

// The two log-weighted kernel integrals (`-2 pi beta` and `-4 pi`).
//
// # Safety
// Out-pointers must be writable.
BtStatus bt_step4_identities(double beta, double *out_first, double *out_second);

// Whole-plane bubble mass (`4 pi beta`).
//
// # Safety
// `out` must be writable.
BtStatus bt_bubble_mass(double beta, double log_delta, double *out);

// Number of bounded kernel modes compatible with `m`-fold symmetry.
//
// # Safety
// `out_count` must be writable.
BtStatus bt_kernel_mode_count(double alpha, uint32_t m, uint32_t *out_count);

// Full Newton solve; `nodes_per_unit <= 0` selects the default (100).
//
// A solve that runs out of iterations still produces a solution handle
// and returns `BtNonConvergence`; inspect it or free it as usual.
//
// # Safety
// `params` from [`bt_params_new`]; `out` writable.
BtStatus bt_newton_solve(const BtParams *params,
                         uint32_t k,
                         double log10_lambda1,
                         double log10_lambda2,
                         double nodes_per_unit,
                         BtSolution **out);

// # Safety
// `solution` must come from [`bt_newton_solve`] and not have been freed.
void bt_solution_free(BtSolution *solution);

// Scalar summary of a solve: convergence flag, iteration count, final
// residual, recovered masses over `2 pi` and remainder sups.
//
// # Safety
// All pointers valid; `solution` from [`bt_newton_solve`].
BtStatus bt_solution_summary(const BtSolution *solution,
                             bool *out_converged,
                             uint32_t *out_iterations,
                             double *out_final_residual,
                             double *out_m1_over_2pi,
                             double *out_m2_over_2pi,
                             double *out_phi_sup1,
                             double *out_phi_sup2);

// Number of grid nodes in a solution.
//
// # Safety
// All pointers valid; `solution` from [`bt_newton_solve`].
BtStatus bt_solution_len(const BtSolution *solution, size_t *out);

// Copy grid and solution columns into caller buffers of length `len`
// (from [`bt_solution_len`]).  Any output pointer may be null to skip
// that column.
//
// # Safety
// Non-null pointers must have room for `len` doubles.
BtStatus bt_solution_profile(const BtSolution *solution,
                             size_t len,
                             double *out_s,
                             double *out_u1,
                             double *out_u2);

#endif  /* BUBBLE_TOWER_H */
