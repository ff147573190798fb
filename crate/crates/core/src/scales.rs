//! Concentration scales: the linear system fixing `ln delta_1..k` for a
//! given pair of coupling parameters, the closed-form power laws of the
//! scales in the two lambdas, and the admissibility region of lambda.

use crate::error::{Error, Result};
use crate::spectrum::BetaSequence;

/// The two small coupling parameters, stored as natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPair {
    pub log_lambda1: f64,
    pub log_lambda2: f64,
}

impl LambdaPair {
    /// From natural logarithms; both must correspond to values in (0, 1).
    pub fn from_ln(log_lambda1: f64, log_lambda2: f64) -> Result<Self> {
        for (name, v) in [("lambda1", log_lambda1), ("lambda2", log_lambda2)] {
            if !v.is_finite() || v >= 0.0 {
                return Err(Error::Validation(format!(
                    "log {name} must be finite and negative (lambda in (0,1)), got {v}"
                )));
            }
        }
        Ok(LambdaPair {
            log_lambda1,
            log_lambda2,
        })
    }

    pub fn from_log10(l1: f64, l2: f64) -> Result<Self> {
        Self::from_ln(l1 * std::f64::consts::LN_10, l2 * std::f64::consts::LN_10)
    }

    pub fn from_linear(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 > 0.0) || !(lambda2 > 0.0) {
            return Err(Error::Validation(format!(
                "lambdas must be positive, got ({lambda1}, {lambda2})"
            )));
        }
        Self::from_ln(lambda1.ln(), lambda2.ln())
    }

    /// Natural log of the component driving the given parity
    /// (odd bubbles couple to lambda1, even ones to lambda2).
    pub fn log_for_parity(&self, ell: u32) -> f64 {
        if ell % 2 == 1 {
            self.log_lambda1
        } else {
            self.log_lambda2
        }
    }
}

/// Logarithms of the concentration scales `delta_1 < ... < delta_k`.
#[derive(Debug, Clone)]
pub struct ScaleSet {
    pub log_deltas: Vec<f64>,
    pub lambda: LambdaPair,
    /// Robin value of the Green function at the origin; 0 on the unit disc.
    pub h00: f64,
}

impl ScaleSet {
    pub fn k(&self) -> u32 {
        self.log_deltas.len() as u32
    }

    /// `ln delta_ell`, 1-based.
    pub fn log_delta(&self, ell: u32) -> f64 {
        self.log_deltas[(ell - 1) as usize]
    }

    /// Whether the scales are strictly ordered (the separation needed by
    /// the tower construction).
    pub fn strictly_ordered(&self) -> bool {
        self.log_deltas.windows(2).all(|w| w[0] < w[1])
    }
}

fn check_betas(betas: &BetaSequence, k: u32) -> Result<()> {
    if k < 1 || k > betas.len() {
        return Err(Error::Validation(format!(
            "k = {k} outside available beta range 1..={}",
            betas.len()
        )));
    }
    if let Some(bad) = (1..=k).find(|&ell| betas.beta(ell) <= 0.0) {
        return Err(Error::Validation(format!(
            "beta_{bad} = {} is not positive",
            betas.beta(bad)
        )));
    }
    Ok(())
}

/// Coefficient of `H(0,0)` in the equation for scale `ell` (it does not
/// depend on the bubble index, only on the parity).
fn h00_coefficient(betas: &BetaSequence, k: u32, ell: u32) -> f64 {
    let params = betas.params();
    let sum_odd: f64 = (1..=k).step_by(2).map(|m| betas.beta(m)).sum();
    let sum_even: f64 = (2..=k).step_by(2).map(|m| betas.beta(m)).sum();
    if ell % 2 == 1 {
        2.0 * sum_odd - params.a() * sum_even - params.alpha1() + 2.0
    } else {
        2.0 * sum_even - params.b() * sum_odd - params.alpha2() + 2.0
    }
}

/// Solve the `k x k` linear system for `ln delta_ell`.
///
/// The equation attached to scale `ell` couples it to every larger
/// scale: same-parity scales enter with coefficient `-2 beta_m`,
/// opposite-parity ones with `+c beta_m` (`c = a` for odd `ell`, `b`
/// for even), plus the constant block
/// `-ln(2 beta_ell^2) + 2 pi Q_ell H(0,0) + ln(2 lambda_i)`.
pub fn solve_log_deltas(
    betas: &BetaSequence,
    k: u32,
    lambda: LambdaPair,
    h00: f64,
) -> Result<ScaleSet> {
    check_betas(betas, k)?;
    let params = betas.params();
    let n = k as usize;
    let mut mat = vec![vec![0.0f64; n]; n];
    let mut rhs = vec![0.0f64; n];
    for ell in 1..=k {
        let row = (ell - 1) as usize;
        let cross = if ell % 2 == 1 { params.a() } else { params.b() };
        mat[row][row] = -betas.beta(ell);
        for m in (ell + 1)..=k {
            let col = (m - 1) as usize;
            if (m - ell) % 2 == 0 {
                mat[row][col] = -2.0 * betas.beta(m);
            } else {
                mat[row][col] = cross * betas.beta(m);
            }
        }
        let log_2beta2 = (2.0 * betas.beta(ell) * betas.beta(ell)).ln();
        let log_2lambda = std::f64::consts::LN_2 + lambda.log_for_parity(ell);
        rhs[row] = log_2beta2
            - 2.0 * std::f64::consts::PI * h00_coefficient(betas, k, ell) * h00
            - log_2lambda;
    }
    let solution = solve_dense(&mat, &rhs)?;
    // residual of every equation, against the assembled system
    for row in 0..n {
        let lhs: f64 = (0..n).map(|c| mat[row][c] * solution[c]).sum();
        let scale = rhs[row]
            .abs()
            .max((0..n).map(|c| (mat[row][c] * solution[c]).abs()).fold(0.0, f64::max))
            .max(1.0);
        if (lhs - rhs[row]).abs() > 1e-10 * scale {
            return Err(Error::Numerical(format!(
                "scale system residual {} in equation {} exceeds tolerance",
                (lhs - rhs[row]).abs(),
                row + 1
            )));
        }
    }
    Ok(ScaleSet {
        log_deltas: solution,
        lambda,
        h00,
    })
}

/// Dense Gaussian elimination with partial pivoting.
fn solve_dense(mat: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = mat.to_vec();
    let mut b: Vec<f64> = rhs.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot_row][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular scale system".into()));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in (row + 1)..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Exponents of `lambda1` and `lambda2` in each scale and in each
/// consecutive ratio `delta_ell / delta_{ell+1}`.
#[derive(Debug, Clone)]
pub struct ExponentTable {
    /// Row `ell-1`: `d ln delta_ell / d ln lambda_i` for `i = 1, 2`.
    pub per_scale: Vec<[f64; 2]>,
    /// Row `ell-1`: exponents of the ratio `delta_ell / delta_{ell+1}`.
    pub ratios: Vec<[f64; 2]>,
}

/// Closed-form lambda exponents of the scales.
///
/// `delta_ell` is `d_ell` times a pure power of the lambdas; the power
/// is a ratio of `P` values over `beta_ell`, with a parity-of-`k` case
/// split, and consecutive ratios collapse to
/// `beta_{k+1} / (beta_ell beta_{ell+1})` and
/// `beta_k / (beta_ell beta_{ell+1})` (exchanged when `k` is even).
pub fn closed_form_exponents(betas: &BetaSequence, k: u32) -> Result<ExponentTable> {
    check_betas(betas, k)?;
    let params = betas.params();
    let t = params.t();
    let p = |ell: u32| crate::spectrum::eval_p(ell, t);
    let k_odd = k % 2 == 1;
    let mut per_scale = Vec::with_capacity(k as usize);
    for ell in 1..=k {
        let beta = betas.beta(ell);
        let row = if ell % 2 == 1 {
            let j = (ell - 1) / 2;
            if k_odd {
                [p(k - 2 * j) / beta, params.a() * p(k - 2 * j - 1) / beta]
            } else {
                [p(k - 2 * j - 1) / beta, params.a() * p(k - 2 * j) / beta]
            }
        } else {
            let j = (ell - 2) / 2;
            if k_odd {
                [params.b() * p(k - 2 * j - 1) / beta, p(k - 2 * j - 2) / beta]
            } else {
                [params.b() * p(k - 2 * j - 2) / beta, p(k - 2 * j - 1) / beta]
            }
        };
        per_scale.push(row);
    }
    let beta_next = betas.beta_continued(k + 1);
    let mut ratios = Vec::with_capacity((k - 1) as usize);
    for ell in 1..k {
        let den = betas.beta(ell) * betas.beta(ell + 1);
        if k_odd {
            ratios.push([beta_next / den, betas.beta(k) / den]);
        } else {
            ratios.push([betas.beta(k) / den, beta_next / den]);
        }
    }
    Ok(ExponentTable { per_scale, ratios })
}

/// Whether a lambda pair lies in the admissible region for height `k`.
///
/// Both components must stay below `lambda_bar`; at the maximal height
/// the parity-dependent power-law constraint couples the two components
/// (`gamma > 0` is a free parameter of that constraint).
pub fn admissible(
    betas: &BetaSequence,
    k: u32,
    lambda: LambdaPair,
    gamma: f64,
    lambda_bar: f64,
) -> Result<bool> {
    check_betas(betas, k)?;
    if !(gamma > 0.0) {
        return Err(Error::Validation(format!("gamma must be positive, got {gamma}")));
    }
    if !(lambda_bar > 0.0) {
        return Err(Error::Validation(format!(
            "lambda_bar must be positive, got {lambda_bar}"
        )));
    }
    if !betas.kmax().allows(k) {
        return Err(Error::Validation(format!(
            "k = {k} exceeds k_max = {}",
            betas.kmax()
        )));
    }
    let log_bar = lambda_bar.ln();
    if lambda.log_lambda1 >= log_bar || lambda.log_lambda2 >= log_bar {
        return Ok(false);
    }
    if betas.kmax() == crate::spectrum::KMax::Finite(k) {
        let exponent = (gamma - betas.beta_continued(k + 1)) / betas.beta(k);
        if k % 2 == 1 {
            // lambda2 <= lambda1^exponent
            if lambda.log_lambda2 > exponent * lambda.log_lambda1 {
                return Ok(false);
            }
        } else if lambda.log_lambda1 > exponent * lambda.log_lambda2 {
            return Ok(false);
        }
    }
    Ok(true)
}
