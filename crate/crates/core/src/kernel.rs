//! Fundamental solutions of the linearized radial equation around a
//! single bubble, a finite-difference check that they solve it, and the
//! bounded, rotation-symmetric kernel basis.

use crate::error::{Error, Result};
use crate::logdomain::log1pexp;

/// Sign selecting one of the two fundamental-solution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSign {
    Plus,
    Minus,
}

/// Angular factor carried by a kernel mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularFactor {
    Radial,
    Cos,
    Sin,
}

/// One member of the bounded symmetric kernel basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMode {
    pub n: i32,
    pub alpha: f64,
    pub sign: ModeSign,
    pub angular: AngularFactor,
}

impl std::fmt::Display for KernelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.angular {
            AngularFactor::Radial => write!(f, "phi_0 (radial)"),
            AngularFactor::Cos => write!(f, "phi_{} cos({} theta)", self.n, self.n),
            AngularFactor::Sin => write!(f, "phi_{} sin({} theta)", self.n, self.n),
        }
    }
}

/// The fundamental solutions
/// `phi_{n,+} = rho^n (a + 2n - (a - 2n) rho^a) / (1 + rho^a)` and
/// `phi_{n,-} = rho^{-n} (a - 2n - (a + 2n) rho^a) / (1 + rho^a)`.
pub fn phi_fundamental(n: i32, alpha: f64, sign: ModeSign, rho: f64) -> f64 {
    debug_assert!(rho > 0.0);
    let nf = n as f64;
    let (power, c0, c1) = match sign {
        ModeSign::Plus => (nf, alpha + 2.0 * nf, alpha - 2.0 * nf),
        ModeSign::Minus => (-nf, alpha - 2.0 * nf, alpha + 2.0 * nf),
    };
    rho.powf(power) * (c0 - c1 * rho.powf(alpha)) / (1.0 + rho.powf(alpha))
}

/// Max normalized residual of the radial linearized equation over the
/// samples, for an arbitrary trial function.
///
/// The equation is checked in its log-radius form
/// `phi_tt - n^2 phi + 2 a^2 e^{at} (1 + e^{at})^{-2} phi = 0`
/// (the original multiplied by `rho^2`), where the closed forms are
/// analytic with derivative scales O(alpha + |n|).  The second
/// derivative comes from a seven-point sixth-order central stencil at a
/// fixed dimensionless step, and the residual is normalized by the sum
/// of the three term magnitudes plus one; the floor keeps the detector
/// absolute where all terms are small, the relative part keeps it
/// meaningful for the unbounded members whose terms grow like powers
/// of `rho`.
pub fn ode_residual_of<F>(f: F, n: i32, alpha: f64, rho_samples: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(alpha > 0.0) {
        return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
    }
    if rho_samples.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Validation("all sample radii must be positive".into()));
    }
    let h = 7e-3;
    // 6th-order central coefficients
    const D2: [f64; 7] = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0];
    let mut worst = 0.0f64;
    for &rho in rho_samples {
        let tau = rho.ln();
        let mut d2 = 0.0;
        for (idx, c) in D2.iter().enumerate() {
            let t = tau + (idx as f64 - 3.0) * h;
            d2 += c * f(t.exp());
        }
        d2 /= 180.0 * h * h;
        let phi = f(rho);
        let t_lap = d2;
        let t_ang = -(n as f64) * (n as f64) * phi;
        let log_pot = (2.0 * alpha * alpha).ln() + alpha * tau - 2.0 * log1pexp(alpha * tau);
        let t_pot = log_pot.exp() * phi;
        let scale = t_lap.abs() + t_ang.abs() + t_pot.abs() + 1.0;
        worst = worst.max((t_lap + t_ang + t_pot).abs() / scale);
    }
    Ok(worst)
}

/// Residual check for a closed-form fundamental solution.
pub fn ode_residual(n: i32, alpha: f64, sign: ModeSign, rho_samples: &[f64]) -> Result<f64> {
    ode_residual_of(|rho| phi_fundamental(n, alpha, sign, rho), n, alpha, rho_samples)
}

/// The bounded kernel basis compatible with `m`-fold rotation symmetry.
///
/// The radial mode is always present.  When `alpha` is an even integer
/// the two angular modes built on `phi_{alpha/2,+}` exist; they survive
/// rotation by `2 pi / m` exactly when `m` divides `alpha / 2`.
pub fn bounded_modes(alpha: f64, m: u32) -> Result<Vec<KernelMode>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
    }
    if m < 1 {
        return Err(Error::Validation("symmetry order m must be >= 1".into()));
    }
    let mut modes = vec![KernelMode {
        n: 0,
        alpha,
        sign: ModeSign::Plus,
        angular: AngularFactor::Radial,
    }];
    let nearest = alpha.round();
    let alpha_even = (alpha - nearest).abs() <= 1e-9 && nearest >= 2.0 && (nearest as i64) % 2 == 0;
    if alpha_even {
        let half = nearest as i64 / 2;
        if half % m as i64 == 0 {
            for angular in [AngularFactor::Cos, AngularFactor::Sin] {
                modes.push(KernelMode {
                    n: half as i32,
                    alpha,
                    sign: ModeSign::Plus,
                    angular,
                });
            }
        }
    }
    Ok(modes)
}

/// Log-spaced sample radii, handy default for the residual checks.
pub fn log_spaced_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}
