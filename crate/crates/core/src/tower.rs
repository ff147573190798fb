//! The explicit two-component approximate solution on the unit disc:
//! single bubbles, their exact Dirichlet projections, the alternating
//! main term, the per-annulus discrepancy functions and the analytic
//! residual of the main term.  Everything is parameterized by
//! `s = ln r` and evaluated through log-domain primitives.

use crate::error::{Error, Result};
use crate::logdomain::{log1mexp, log1pexp, stable_log_add, SignedLog};
use crate::scales::{self, LambdaPair, ScaleSet};
use crate::spectrum::{self, BetaSequence, SystemParams};

/// A single whole-plane bubble: exponent `beta` and concentration
/// scale `delta`, the latter stored logarithmically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleProfile {
    pub beta: f64,
    pub log_delta: f64,
}

impl BubbleProfile {
    pub fn new(beta: f64, log_delta: f64) -> Result<Self> {
        if !(beta > 0.0) || !log_delta.is_finite() {
            return Err(Error::Validation(format!(
                "bubble requires beta > 0 and finite log delta, got ({beta}, {log_delta})"
            )));
        }
        Ok(BubbleProfile { beta, log_delta })
    }

    /// Boundary trace of the bubble on the unit circle,
    /// `ln(2 beta^2 delta^beta / (1 + delta^beta)^2)`; the projection
    /// on the disc subtracts exactly this constant.
    pub fn boundary_value(&self) -> f64 {
        let bd = self.beta * self.log_delta;
        (2.0 * self.beta * self.beta).ln() + bd - 2.0 * stable_log_add(0.0, bd)
    }
}

/// The bubble `w(r) = ln( 2 beta^2 delta^beta / (delta^beta + r^beta)^2 )`
/// at `s = ln r`.  Exact in log domain; no underflow for `|ln delta|`
/// up to 1e4.
pub fn eval_w(bubble: &BubbleProfile, log_r: f64) -> f64 {
    let bd = bubble.beta * bubble.log_delta;
    (2.0 * bubble.beta * bubble.beta).ln() + bd
        - 2.0 * stable_log_add(bd, bubble.beta * log_r)
}

/// The Dirichlet projection of a bubble on the unit disc.
///
/// `w - Pw` is harmonic with constant boundary trace, hence constant:
/// the projection is exactly the bubble minus its boundary value.
pub fn eval_pw(bubble: &BubbleProfile, log_r: f64) -> Result<f64> {
    if log_r > 0.0 {
        return Err(Error::Validation(format!(
            "projection is defined on the closed unit disc (log r <= 0), got {log_r}"
        )));
    }
    Ok(eval_w(bubble, log_r) - bubble.boundary_value())
}

/// The full tower: parameters, height, exponents and scales.
///
/// Immutable after construction; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct TowerProfile {
    params: SystemParams,
    k: u32,
    betas: BetaSequence,
    scales: ScaleSet,
}

impl TowerProfile {
    /// Build the tower of height `k` on the unit disc (`H(0,0) = 0`).
    pub fn new(params: SystemParams, k: u32, lambda: LambdaPair) -> Result<Self> {
        let betas = spectrum::compute_betas(&params, k)?;
        if !betas.kmax().allows(k) {
            return Err(Error::Validation(format!(
                "k = {k} exceeds k_max = {} for these parameters",
                betas.kmax()
            )));
        }
        let scales = scales::solve_log_deltas(&betas, k, lambda, 0.0)?;
        Ok(TowerProfile {
            params,
            k,
            betas,
            scales,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn betas(&self) -> &BetaSequence {
        &self.betas
    }
    pub fn scales(&self) -> &ScaleSet {
        &self.scales
    }
    pub fn lambda(&self) -> LambdaPair {
        self.scales.lambda
    }

    pub fn bubble(&self, ell: u32) -> BubbleProfile {
        BubbleProfile {
            beta: self.betas.beta(ell),
            log_delta: self.scales.log_delta(ell),
        }
    }

    /// Both components of the main term at `s = ln r <= 0`:
    /// component 1 sums the odd projections minus `a/2` times the even
    /// ones, component 2 mirrors with `b/2`.
    pub fn main_term(&self, log_r: f64) -> Result<(f64, f64)> {
        if log_r > 0.0 {
            return Err(Error::Validation(format!(
                "main term is defined for log r <= 0, got {log_r}"
            )));
        }
        let mut w1 = 0.0;
        let mut w2 = 0.0;
        for ell in 1..=self.k {
            let pw = eval_pw(&self.bubble(ell), log_r)?;
            if ell % 2 == 1 {
                w1 += pw;
                w2 -= 0.5 * self.params.b() * pw;
            } else {
                w2 += pw;
                w1 -= 0.5 * self.params.a() * pw;
            }
        }
        Ok((w1, w2))
    }

    /// `ln` of the bubble density `r^{beta_ell - 2} e^{w_ell}` at `s`.
    pub fn log_density(&self, ell: u32, log_r: f64) -> f64 {
        (self.betas.beta(ell) - 2.0) * log_r + eval_w(&self.bubble(ell), log_r)
    }

    /// Annulus of bubble `ell` in `s = ln r`: geometric midpoints of the
    /// neighbouring scales, with `delta_0 = 0` and `delta_{k+1} = inf`
    /// (the upper end clipped to the domain boundary `s = 0`).
    pub fn annulus(&self, ell: u32) -> (f64, f64) {
        let lo = if ell == 1 {
            f64::NEG_INFINITY
        } else {
            0.5 * (self.scales.log_delta(ell - 1) + self.scales.log_delta(ell))
        };
        let hi = if ell == self.k {
            0.0
        } else {
            0.5 * (self.scales.log_delta(ell) + self.scales.log_delta(ell + 1))
        };
        (lo, hi)
    }

    /// Index of the annulus containing `s`.
    pub fn active_annulus(&self, log_r: f64) -> u32 {
        for ell in 1..self.k {
            if log_r <= self.annulus(ell).1 {
                return ell;
            }
        }
        self.k
    }

    /// Discrepancy `Theta_ell` at scaled radius `y`, `log_y = ln |y|`.
    ///
    /// Requires `delta_ell * |y| <= 1`.  On the disc the Robin terms
    /// vanish and the defining equations of the scales cancel every
    /// O(ln delta) constant exactly, leaving
    ///
    /// ```text
    /// Theta_ell(s) = 2 ln(1 + delta_ell^{beta_ell})
    ///    - 2 sum_{i != ell} c_i [ ln(1 + e^{g_i(s)}) - ln(1 + delta_i^{beta_i}) ]
    /// ```
    ///
    /// with `g_i = beta_i (ln delta_i - s)` below the bubble and
    /// mirrored above, `c_i = 1` for indices of the same parity and
    /// `-a/2` (resp. `-b/2`) across.  Every term is a small softplus
    /// difference, so the value carries relative precision even when
    /// the raw definition would cancel ten significant digits.
    pub fn theta(&self, ell: u32, log_y: f64) -> Result<f64> {
        if ell < 1 || ell > self.k {
            return Err(Error::Validation(format!(
                "bubble index {ell} outside 1..={}",
                self.k
            )));
        }
        let s = self.scales.log_delta(ell) + log_y;
        if s > 0.0 {
            return Err(Error::Validation(format!(
                "Theta_{ell} needs delta_ell |y| <= 1, got ln(delta |y|) = {s}"
            )));
        }
        let cross = if ell % 2 == 1 {
            self.params.a()
        } else {
            self.params.b()
        };
        let mut th =
            2.0 * log1pexp(self.betas.beta(ell) * self.scales.log_delta(ell));
        for i in 1..=self.k {
            if i == ell {
                continue;
            }
            let beta = self.betas.beta(i);
            let x = self.scales.log_delta(i);
            let arg = if i < ell { beta * (x - s) } else { beta * (s - x) };
            let c = if (i % 2) == (ell % 2) { 1.0 } else { -0.5 * cross };
            th -= 2.0 * c * (log1pexp(arg) - log1pexp(beta * x));
        }
        Ok(th)
    }

    /// `Theta_ell` straight from its definition (main term minus bubble
    /// minus the logarithmic weight); numerically this cancels large
    /// constants and is kept as the independent route for tests.
    pub fn theta_from_definition(&self, ell: u32, log_y: f64) -> Result<f64> {
        if ell < 1 || ell > self.k {
            return Err(Error::Validation(format!(
                "bubble index {ell} outside 1..={}",
                self.k
            )));
        }
        let s = self.scales.log_delta(ell) + log_y;
        if s > 0.0 {
            return Err(Error::Validation(format!(
                "Theta_{ell} needs delta_ell |y| <= 1, got ln(delta |y|) = {s}"
            )));
        }
        let (w1, w2) = self.main_term(s)?;
        let beta = self.betas.beta(ell);
        let (component, alpha) = if ell % 2 == 1 {
            (w1, self.params.alpha1())
        } else {
            (w2, self.params.alpha2())
        };
        let log_2lambda = std::f64::consts::LN_2 + self.scales.lambda.log_for_parity(ell);
        Ok(component - eval_w(&self.bubble(ell), s) - (beta - alpha) * s + log_2lambda)
    }

    /// `ln` of the exponential nonlinearity `2 lambda_i h_i e^{W_i}` at
    /// `s`, for the component driven by bubbles of the given parity.
    fn log_lambda_term(&self, parity_odd: bool, s: f64, w_pair: (f64, f64)) -> f64 {
        let (alpha, w, log_lam) = if parity_odd {
            (self.params.alpha1(), w_pair.0, self.scales.lambda.log_lambda1)
        } else {
            (self.params.alpha2(), w_pair.1, self.scales.lambda.log_lambda2)
        };
        std::f64::consts::LN_2 + log_lam + (alpha - 2.0) * s + w
    }

    /// Signed-log value of `sum_parity t_m - 2 lambda_i h_i e^{W_i}`.
    ///
    /// Within the active annulus the lambda term is rewritten exactly as
    /// `t_ell e^{Theta_ell}` and the dominant cancellation goes through
    /// `expm1`, so the group stays accurate when the two sides agree to
    /// hundreds of digits in linear scale.
    fn residual_group(&self, parity_odd: bool, s: f64, w_pair: (f64, f64)) -> Result<SignedLog> {
        let indices: Vec<u32> = (1..=self.k)
            .filter(|ell| (ell % 2 == 1) == parity_odd)
            .collect();
        let lam_log = self.log_lambda_term(parity_odd, s, w_pair);
        if indices.is_empty() {
            return Ok(SignedLog::new(lam_log, -1));
        }
        // stabilize through the bubble dominating at s: the annulus owner
        // when it has the right parity, otherwise the largest density
        let active = self.active_annulus(s);
        let pivot = if (active % 2 == 1) == parity_odd {
            active
        } else {
            *indices
                .iter()
                .max_by(|&&x, &&y| {
                    self.log_density(x, s)
                        .partial_cmp(&self.log_density(y, s))
                        .unwrap()
                })
                .unwrap()
        };
        let log_y = s - self.scales.log_delta(pivot);
        let theta = self.theta(pivot, log_y)?;
        let log_t_pivot = self.log_density(pivot, s);
        // t_pivot (1 - e^theta)
        let mut acc = if theta == 0.0 {
            SignedLog::ZERO
        } else if theta < 0.0 {
            SignedLog::new(log_t_pivot + log1mexp(theta), 1)
        } else {
            SignedLog::new(log_t_pivot + theta + log1mexp(-theta), -1)
        };
        for &m in &indices {
            if m != pivot {
                acc = acc.add(SignedLog::positive(self.log_density(m, s)));
            }
        }
        Ok(acc)
    }

    /// Analytic residual of the main term at `s = ln r`, per component,
    /// as signed log-magnitudes.
    ///
    /// Each projected bubble satisfies its own equation exactly, so the
    /// residual is the alternating combination of the two parity groups.
    pub fn residual(&self, log_r: f64) -> Result<(SignedLog, SignedLog)> {
        if !(log_r <= 0.0) || log_r == f64::NEG_INFINITY {
            return Err(Error::Validation(format!(
                "residual is defined for 0 < r <= 1, got ln r = {log_r}"
            )));
        }
        let w_pair = self.main_term(log_r)?;
        let g1 = self.residual_group(true, log_r, w_pair)?;
        let g2 = self.residual_group(false, log_r, w_pair)?;
        let r1 = g1.add(g2.scale(-0.5 * self.params.a()));
        let r2 = g2.add(g1.scale(-0.5 * self.params.b()));
        Ok((r1, r2))
    }

    /// Sup of `|Theta_ell|` over each annulus, sampled on 512 points per
    /// annulus (the unbounded inner end clipped 40 units below scale).
    pub fn theta_sup_per_annulus(&self) -> Result<Vec<f64>> {
        let mut sups = Vec::with_capacity(self.k as usize);
        for ell in 1..=self.k {
            let (lo, hi) = self.annulus(ell);
            let lo = lo.max(self.scales.log_delta(ell) - 40.0);
            let mut sup = 0.0f64;
            for i in 0..=512 {
                let s = lo + (hi - lo) * i as f64 / 512.0;
                sup = sup.max(self.theta(ell, s - self.scales.log_delta(ell))?.abs());
            }
            sups.push(sup);
        }
        Ok(sups)
    }

    /// Residual by direct linear-space subtraction.  Only trustworthy at
    /// moderate lambda where no term overflows; used as the second route
    /// in the dual-path diagnostics.
    pub fn residual_naive(&self, log_r: f64) -> Result<(f64, f64)> {
        if !(log_r <= 0.0) || log_r == f64::NEG_INFINITY {
            return Err(Error::Validation(format!(
                "residual is defined for 0 < r <= 1, got ln r = {log_r}"
            )));
        }
        let w_pair = self.main_term(log_r)?;
        let mut sum_odd = 0.0;
        let mut sum_even = 0.0;
        for ell in 1..=self.k {
            let t = self.log_density(ell, log_r).exp();
            if ell % 2 == 1 {
                sum_odd += t;
            } else {
                sum_even += t;
            }
        }
        let lam1 = self.log_lambda_term(true, log_r, w_pair).exp();
        let lam2 = self.log_lambda_term(false, log_r, w_pair).exp();
        let g1 = sum_odd - lam1;
        let g2 = sum_even - lam2;
        Ok((
            g1 - 0.5 * self.params.a() * g2,
            g2 - 0.5 * self.params.b() * g1,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower(a: f64, b: f64, a1: f64, a2: f64, k: u32, l1: f64, l2: f64) -> TowerProfile {
        let params = SystemParams::new(a, b, a1, a2).unwrap();
        TowerProfile::new(params, k, LambdaPair::from_linear(l1, l2).unwrap()).unwrap()
    }

    #[test]
    fn bubble_value_at_its_scale() {
        // w(delta) = ln(2 beta^2 / (4 delta^beta)); for beta=2, delta=1: ln 2
        let b = BubbleProfile::new(2.0, 0.0).unwrap();
        assert!((eval_w(&b, 0.0) - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn bubble_tail_slope() {
        let b = BubbleProfile::new(3.0, -5.0).unwrap();
        let h = 1e-6;
        let s = 4.0; // far outside the scale
        let slope = (eval_w(&b, s + h) - eval_w(&b, s - h)) / (2.0 * h);
        assert!((slope + 2.0 * b.beta).abs() < 1e-6);
    }

    #[test]
    fn bubble_no_underflow_at_extreme_scales() {
        let b = BubbleProfile::new(2.0, -1.0e4).unwrap();
        let v = eval_w(&b, -1.0e4);
        assert!(v.is_finite());
        // at r = delta the density is beta^2 delta^{-2} / 2 in log form
        let log_t = (b.beta - 2.0) * b.log_delta + v;
        let expect = (b.beta * b.beta / 2.0).ln() - 2.0 * b.log_delta;
        assert!((log_t - expect).abs() < 1e-9);
    }

    #[test]
    fn projection_boundary_and_constancy() {
        let b = BubbleProfile::new(2.5, -7.0).unwrap();
        assert!(eval_pw(&b, 0.0).unwrap().abs() < 1e-13);
        assert!(eval_pw(&b, 0.1).is_err());
        let c0 = eval_w(&b, -0.3) - eval_pw(&b, -0.3).unwrap();
        for i in 0..100 {
            let s = -12.0 * (i as f64 + 0.5) / 100.0;
            let c = eval_w(&b, s) - eval_pw(&b, s).unwrap();
            assert!((c - c0).abs() < 1e-13);
        }
    }

    #[test]
    fn projection_matches_small_delta_expansion() {
        // Pw = w - ln(2 beta^2 delta^beta) + 2 ln(1 + delta^beta): the
        // correction beyond the leading constant is O(delta^beta)
        let b = BubbleProfile::new(2.0, -10.0).unwrap();
        let lead = eval_w(&b, -1.0) - (2.0 * b.beta * b.beta).ln() - b.beta * b.log_delta;
        let exact = eval_pw(&b, -1.0).unwrap();
        let gap = (exact - lead).abs();
        assert!(gap <= 2.5 * (b.beta * b.log_delta).exp());
    }

    #[test]
    fn main_term_boundary_and_k1_shape() {
        let t = tower(1.0, 1.0, 2.0, 2.0, 1, 1e-6, 1e-6);
        let (w1, w2) = t.main_term(0.0).unwrap();
        assert_eq!((w1, w2), (0.0, 0.0));
        // k=1: W2 = -(b/2) Pw_1 everywhere
        for s in [-8.0, -4.0, -1.0, -0.2] {
            let (w1, w2) = t.main_term(s).unwrap();
            assert!((w2 + 0.5 * t.params().b() * w1).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_is_constant_for_single_bubble() {
        let t = tower(1.0, 1.0, 2.0, 2.0, 1, 1e-6, 1e-6);
        // Theta_1(y) = 2 ln(1 + delta^beta), independent of y
        let expect = 2.0 * stable_log_add(0.0, t.betas().beta(1) * t.scales().log_delta(1));
        // delta_1 ~ 5e-4, so |y| up to e^7 stays inside the disc
        for log_y in [-3.0, 0.0, 4.0, 7.0] {
            let th = t.theta(1, log_y).unwrap();
            assert!((th - expect).abs() < 1e-12, "log_y={log_y}");
        }
    }

    #[test]
    fn theta_routes_agree() {
        // the rearranged evaluator and the literal definition differ
        // only by the residual of the scale equations
        for (k, l1, l2) in [(2u32, 1e-4, 1e-4), (4, 1e-6, 3e-7), (3, 1e-8, 1e-8)] {
            let t = tower(1.0, 2.0, 2.0, 2.0, k, l1, l2);
            for ell in 1..=k {
                let x = t.scales().log_delta(ell);
                for frac in [0.1, 0.5, 0.9] {
                    let s = x * frac; // between the scale and the boundary
                    let a = t.theta(ell, s - x).unwrap();
                    let b = t.theta_from_definition(ell, s - x).unwrap();
                    assert!((a - b).abs() <= 1e-10, "k={k} ell={ell} {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn theta_domain_checks() {
        let t = tower(1.0, 1.0, 2.0, 2.0, 2, 1e-6, 1e-6);
        assert!(t.theta(3, 0.0).is_err());
        let beyond_boundary = -t.scales().log_delta(1) + 1.0;
        assert!(t.theta(1, beyond_boundary).is_err());
    }

    #[test]
    fn lambda_term_equals_density_times_exp_theta() {
        // 2 lambda1 r^{alpha1-2} e^{W1} = r^{beta-2} e^{w_ell} e^{Theta_ell}
        // for every odd ell at every radius
        let t = tower(1.0, 2.0, 2.0, 2.0, 4, 1e-5, 1e-5);
        for s in [-9.0, -6.5, -4.0, -1.0, -0.1] {
            let w_pair = t.main_term(s).unwrap();
            let direct = t.log_lambda_term(true, s, w_pair);
            for ell in [1u32, 3] {
                let via_theta = t.log_density(ell, s)
                    + t.theta(ell, s - t.scales().log_delta(ell)).unwrap();
                assert!(
                    (direct - via_theta).abs() <= 1e-12 * direct.abs().max(1.0),
                    "s={s} ell={ell}"
                );
            }
            let direct2 = t.log_lambda_term(false, s, w_pair);
            for ell in [2u32, 4] {
                let via_theta = t.log_density(ell, s)
                    + t.theta(ell, s - t.scales().log_delta(ell)).unwrap();
                assert!((direct2 - via_theta).abs() <= 1e-12 * direct2.abs().max(1.0));
            }
        }
    }

    #[test]
    fn stabilized_residual_matches_naive_at_moderate_lambda() {
        let t = tower(1.0, 1.0, 2.0, 2.0, 2, 1e-3, 1e-3);
        for i in 0..60 {
            let s = -7.0 + 6.8 * (i as f64) / 59.0;
            let (r1, r2) = t.residual(s).unwrap();
            let (n1, n2) = t.residual_naive(s).unwrap();
            let scale = n1.abs().max(n2.abs()).max(1e-280);
            assert!(
                (r1.value() - n1).abs() <= 1e-8 * scale.max(r1.value().abs()),
                "s={s}: {} vs {}",
                r1.value(),
                n1
            );
            assert!((r2.value() - n2).abs() <= 1e-8 * scale.max(r2.value().abs()));
        }
    }

    #[test]
    fn single_bubble_residual_is_tiny_off_scale() {
        // k=1 at r=0.9: the residual is dominated by the coupling to the
        // second component and stays far below the peak bubble density
        let t = tower(1.0, 1.0, 2.0, 2.0, 1, 1e-8, 1e-8);
        let (r1, _) = t.residual(0.9f64.ln()).unwrap();
        let peak = (t.betas().beta(1).powi(2) / 2.0).ln() - 2.0 * t.scales().log_delta(1);
        assert!(r1.log_abs < peak + (1e-6f64).ln());
    }

    #[test]
    fn residual_domain_errors() {
        let t = tower(1.0, 1.0, 2.0, 2.0, 1, 1e-6, 1e-6);
        assert!(t.residual(f64::NEG_INFINITY).is_err());
        assert!(t.residual(0.3).is_err());
    }

    #[test]
    fn annulus_partition() {
        let t = tower(1.0, 2.0, 2.0, 2.0, 3, 1e-8, 1e-8);
        assert_eq!(t.annulus(1).0, f64::NEG_INFINITY);
        assert_eq!(t.annulus(3).1, 0.0);
        assert_eq!(t.active_annulus(t.scales().log_delta(2)), 2);
        assert_eq!(t.active_annulus(-0.01), 3);
        assert_eq!(t.active_annulus(t.scales().log_delta(1) - 30.0), 1);
    }

    #[test]
    fn laplacian_consistency() {
        // second differences of W in s, mapped through e^{-2s}, reproduce
        // the alternating bubble-density combination
        let t = tower(1.0, 2.0, 2.0, 2.0, 2, 1e-6, 1e-6);
        let peak: f64 = 1.0; // densities scaled by r^2 are O(beta^2)
        for i in 0..50 {
            let lo = t.scales().log_delta(1) - 2.0;
            let s = lo + (-0.1 - lo) * (i as f64) / 49.0;
            let h = 4e-3;
            let w = |s: f64| t.main_term(s).unwrap().0;
            let d2h = (w(s + h) - 2.0 * w(s) + w(s - h)) / (h * h);
            let d2h2 = (w(s + h / 2.0) - 2.0 * w(s) + w(s - h / 2.0)) / (h * h / 4.0);
            let d2 = (4.0 * d2h2 - d2h) / 3.0;
            let mut expect = 0.0; // e^{2s} * (-Delta W_1)
            for ell in 1..=t.k() {
                let dens = (t.log_density(ell, s) + 2.0 * s).exp();
                if ell % 2 == 1 {
                    expect += dens;
                } else {
                    expect -= 0.5 * t.params().a() * dens;
                }
            }
            let denom = d2.abs().max(expect.abs()).max(0.01 * peak);
            assert!(
                (d2 + expect).abs() <= 1e-6 * denom.max(2e-3),
                "s={s}: {d2} vs {}",
                -expect
            );
        }
    }

    #[test]
    fn theta_sup_shrinks_along_diagonal_sweep() {
        // A2, k=2: max over annuli of |Theta| is nonincreasing (10% slack)
        // as lambda sweeps down geometrically
        let mut prev = f64::INFINITY;
        for e in [-3.0, -5.0, -7.0, -9.0] {
            let params = SystemParams::new(1.0, 1.0, 2.0, 2.0).unwrap();
            let t = TowerProfile::new(params, 2, LambdaPair::from_log10(e, e).unwrap()).unwrap();
            let mut sup: f64 = 0.0;
            for ell in 1..=2 {
                let (lo, hi) = t.annulus(ell);
                let lo = lo.max(t.scales().log_delta(ell) - 40.0);
                for i in 0..=200 {
                    let s = lo + (hi - lo) * (i as f64) / 200.0;
                    sup = sup.max(t.theta(ell, s - t.scales().log_delta(ell)).unwrap().abs());
                }
            }
            assert!(sup <= 1.1 * prev, "sup={sup} prev={prev}");
            prev = sup;
        }
    }
}
