//! Log-domain arithmetic primitives.
//!
//! Every radial quantity in this crate lives in log space: radii as
//! `s = ln r`, concentration scales as `ln delta`, densities as
//! `(ln |value|, sign)` pairs.  Scales can sit hundreds of orders of
//! magnitude below 1, so linear-space intermediates are never formed;
//! the only exponentials taken are of arguments that are O(1) by
//! construction.

/// `ln(e^x + e^y)` without overflow or underflow.
///
/// Stable for arbitrarily large `|x - y|`; `-inf` acts as the additive
/// identity.
#[inline]
pub fn stable_log_add(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let m = x.max(y);
    m + (-(x - y).abs()).exp().ln_1p()
}

/// `ln(1 + e^x)` (softplus), stable on the whole line.
#[inline]
pub fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(1 - e^x)` for `x < 0`.
#[inline]
pub fn log1mexp(x: f64) -> f64 {
    debug_assert!(x < 0.0);
    // switch point ln(1/2) keeps both branches well conditioned
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// A real number stored as `sign * exp(log_abs)`.
///
/// `sign == 0` encodes exact zero (with `log_abs = -inf`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub log_abs: f64,
    pub sign: i8,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        log_abs: f64::NEG_INFINITY,
        sign: 0,
    };

    pub fn new(log_abs: f64, sign: i8) -> Self {
        if sign == 0 || log_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        SignedLog { log_abs, sign }
    }

    /// Positive value `exp(log_abs)`.
    pub fn positive(log_abs: f64) -> Self {
        Self::new(log_abs, 1)
    }

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                log_abs: v.abs().ln(),
                sign: if v > 0.0 { 1 } else { -1 },
            }
        }
    }

    /// Materialize the value; may under- or overflow to 0 / inf.
    pub fn value(self) -> f64 {
        self.sign as f64 * self.log_abs.exp()
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Multiply by `exp(t)`.
    pub fn scale_exp(self, t: f64) -> Self {
        if self.sign == 0 {
            self
        } else {
            SignedLog {
                log_abs: self.log_abs + t,
                sign: self.sign,
            }
        }
    }

    /// Multiply by an ordinary real factor.
    pub fn scale(self, c: f64) -> Self {
        if c == 0.0 || self.sign == 0 {
            return Self::ZERO;
        }
        SignedLog {
            log_abs: self.log_abs + c.abs().ln(),
            sign: if c > 0.0 { self.sign } else { -self.sign },
        }
    }

}

/// Exact signed addition in log space.
///
/// The only cancellation happens between the two leading log
/// magnitudes, handled through `log1mexp`.
impl std::ops::Add for SignedLog {
    type Output = SignedLog;

    fn add(self, other: Self) -> Self {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_abs >= other.log_abs {
            (self, other)
        } else {
            (other, self)
        };
        if big.sign == small.sign {
            SignedLog {
                log_abs: stable_log_add(big.log_abs, small.log_abs),
                sign: big.sign,
            }
        } else {
            let d = small.log_abs - big.log_abs;
            if d == 0.0 {
                Self::ZERO
            } else {
                SignedLog {
                    log_abs: big.log_abs + log1mexp(d),
                    sign: big.sign,
                }
            }
        }
    }
}

impl std::ops::Neg for SignedLog {
    type Output = SignedLog;

    fn neg(self) -> Self {
        SignedLog {
            log_abs: self.log_abs,
            sign: -self.sign,
        }
    }
}

/// Neumaier compensated accumulator.
///
/// Order-fixed summation keeps quadrature reports bit-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_extreme_separation() {
        assert_eq!(stable_log_add(0.0, -1.0e4), 0.0);
        assert_eq!(stable_log_add(-1.0e4, 0.0), 0.0);
        let v = stable_log_add(1234.0, 1232.0);
        assert!((v - 1234.126928011042972496444).abs() < 1e-12);
    }

    #[test]
    fn log_add_neg_infinity_identity() {
        assert_eq!(stable_log_add(f64::NEG_INFINITY, -3.0), -3.0);
        assert_eq!(
            stable_log_add(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn log1mexp_both_branches() {
        for &x in &[-0.1f64, -0.5, -0.7, -5.0, -50.0] {
            let expect = (1.0 - x.exp()).ln();
            assert!((log1mexp(x) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
        // near zero the naive route cancels; compare against the series
        // ln(1 - e^x) = ln(-x) + x/2 + O(x^2)
        let x = -1e-8f64;
        let series = (-x).ln() + x / 2.0;
        assert!((log1mexp(x) - series).abs() < 1e-12);
    }

    #[test]
    fn signed_log_addition() {
        let a = SignedLog::from_value(3.0);
        let b = SignedLog::from_value(-2.0);
        assert!((a.add(b).value() - 1.0).abs() < 1e-15);
        assert!(a.add(a.neg()).is_zero());
    }

    #[test]
    fn signed_log_cancellation_of_huge_values() {
        // exp(5000) - exp(5000 - 1e-9): representable only in log space;
        // exact log of the difference is 5000 + ln(1 - exp(gap)) with the
        // gap as actually stored after rounding
        let less = 5000.0 - 1e-9;
        let big = SignedLog::positive(5000.0);
        let slightly_less = SignedLog::new(less, -1);
        let d = big.add(slightly_less);
        assert_eq!(d.sign, 1);
        let expect = 5000.0 + log1mexp(less - 5000.0);
        assert!((d.log_abs - expect).abs() < 1e-12 * expect.abs());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut c = CompensatedSum::new();
        let n = 1_000_000;
        for _ in 0..n {
            c.add(0.1);
        }
        assert!((c.total() - 0.1 * n as f64).abs() < 1e-9);
    }
}
