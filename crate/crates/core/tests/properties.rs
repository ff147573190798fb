//! Randomized invariants of the polynomial layer, the scale system and
//! the log-domain primitives.

use proptest::prelude::*;

use bubble_tower::logdomain::{log1pexp, stable_log_add, SignedLog};
use bubble_tower::masses;
use bubble_tower::scales::{self, LambdaPair};
use bubble_tower::spectrum::{self, SystemParams};

fn params_strategy() -> impl Strategy<Value = SystemParams> {
    (0.2f64..2.5, 0.2f64..2.5, 0.4f64..3.0, 0.4f64..3.0)
        .prop_map(|(a, b, a1, a2)| SystemParams::new(a, b, a1, a2).unwrap())
}

proptest! {
    #[test]
    fn p_recurrences_hold(t in 0.0f64..8.0, j in 1u32..10) {
        let lhs = spectrum::eval_p(2 * j + 1, t);
        let rhs = t * spectrum::eval_p(2 * j, t) - spectrum::eval_p(2 * j - 1, t);
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
        let lhs = spectrum::eval_p(2 * j + 2, t);
        let rhs = spectrum::eval_p(2 * j + 1, t) - spectrum::eval_p(2 * j, t);
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale);
    }

    #[test]
    fn p_quadratic_first_integrals(t in 0.0f64..8.0, j in 1u32..10) {
        let (p0, p1, p2) = (
            spectrum::eval_p(2 * j, t),
            spectrum::eval_p(2 * j + 1, t),
            spectrum::eval_p(2 * j + 2, t),
        );
        let scale = (p1 * p1).abs().max((t * p0 * p0).abs()).max(1.0);
        prop_assert!((p1 * p1 + t * p0 * p0 - t * p1 * p0 - 1.0).abs() <= 1e-9 * scale);
        prop_assert!((t * p2 * p2 + p1 * p1 - t * p2 * p1 - 1.0).abs() <= 1e-9 * scale);
    }

    #[test]
    fn chebyshev_factorization(x in -1.0f64..3.0, j in 0u32..10) {
        let t = 2.0 * x + 2.0;
        let podd = spectrum::eval_p(2 * j + 1, t);
        let lhs = spectrum::eval_t(2 * j + 1, x);
        let rhs = 1.0 + (x - 1.0) * podd * podd;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn masses_sum_and_product_agree(p in params_strategy(), pick in 0.0f64..1.0) {
        let top = spectrum::compute_kmax(&p).as_finite().unwrap_or(9).min(9);
        let k = 1 + (pick * top as f64) as u32;
        let betas = spectrum::compute_betas(&p, k).unwrap();
        let ms = masses::local_masses(&betas, k).unwrap();
        let mp = masses::local_masses_product(&p, k).unwrap();
        prop_assert!((ms.m1_over_2pi - mp.m1_over_2pi).abs() <= 1e-10 * ms.m1_over_2pi.abs().max(1.0));
        prop_assert!((ms.m2_over_2pi - mp.m2_over_2pi).abs() <= 1e-10 * ms.m2_over_2pi.abs().max(1.0));
    }

    #[test]
    fn scale_system_residuals_and_shift(
        p in params_strategy(),
        e1 in -12.0f64..-3.0,
        e2 in -12.0f64..-3.0,
    ) {
        let kmax = spectrum::compute_kmax(&p).as_finite().unwrap_or(6).min(6);
        let betas = spectrum::compute_betas(&p, kmax).unwrap();
        let lambda = LambdaPair::from_log10(e1, e2).unwrap();
        // the solver re-checks every equation residual internally
        let set = scales::solve_log_deltas(&betas, kmax, lambda, 0.0).unwrap();
        prop_assert_eq!(set.log_deltas.len(), kmax as usize);
        // scaling law: a unit shift of ln lambda1 moves each scale by the
        // closed-form exponent
        let table = scales::closed_form_exponents(&betas, kmax).unwrap();
        let shifted = scales::solve_log_deltas(
            &betas,
            kmax,
            LambdaPair::from_ln(lambda.log_lambda1 + 1.0, lambda.log_lambda2).unwrap(),
            0.0,
        )
        .unwrap();
        for ell in 1..=kmax {
            let fd = shifted.log_delta(ell) - set.log_delta(ell);
            prop_assert!((fd - table.per_scale[(ell - 1) as usize][0]).abs() <= 1e-9);
        }
    }

    #[test]
    fn log_add_invariants(x in -700.0f64..700.0, y in -700.0f64..700.0) {
        let v = stable_log_add(x, y);
        prop_assert!(v >= x.max(y));
        prop_assert!(v <= x.max(y) + std::f64::consts::LN_2 + 1e-12);
        prop_assert_eq!(v, stable_log_add(y, x));
        // adding a hugely smaller term is a no-op
        prop_assert_eq!(stable_log_add(x, x - 800.0), x);
        prop_assert!((log1pexp(x) - stable_log_add(0.0, x)).abs() <= 1e-12 * log1pexp(x).max(1.0));
    }

    #[test]
    fn signed_log_add_matches_linear_arithmetic(
        a in -30.0f64..30.0,
        b in -30.0f64..30.0,
        sa in prop::bool::ANY,
        sb in prop::bool::ANY,
    ) {
        let x = SignedLog::new(a, if sa { 1 } else { -1 });
        let y = SignedLog::new(b, if sb { 1 } else { -1 });
        let got = x.add(y).value();
        let expect = x.value() + y.value();
        prop_assert!((got - expect).abs() <= 1e-9 * expect.abs().max(1e-12));
    }
}
