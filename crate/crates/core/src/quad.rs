//! Composite Gauss-Legendre quadrature in log radius, and the
//! verifiable integrals built on it: single-bubble masses, the
//! log-weighted kernel integrals, L^p residual norms with per-annulus
//! breakdown, local masses of the tower, and the Green-limit deviation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logdomain::{CompensatedSum, SignedLog};
use crate::masses;
use crate::scales::LambdaPair;
use crate::tower::TowerProfile;

const LN_10: f64 = std::f64::consts::LN_10;

/// A panelized range of log radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub s_min: f64,
    pub s_max: f64,
    /// Composite panels per factor of 10 in radius.
    pub panels_per_decade: u32,
    /// Gauss-Legendre order within each panel.
    pub nodes_per_panel: u32,
}

impl RadialGrid {
    pub fn new(s_min: f64, s_max: f64, panels_per_decade: u32, nodes_per_panel: u32) -> Result<Self> {
        if !(s_min < s_max) || !s_min.is_finite() || !s_max.is_finite() {
            return Err(Error::Validation(format!(
                "grid needs finite s_min < s_max, got [{s_min}, {s_max}]"
            )));
        }
        if panels_per_decade == 0 || nodes_per_panel < 2 || nodes_per_panel > 64 {
            return Err(Error::Validation(
                "panels_per_decade >= 1 and 2 <= nodes_per_panel <= 64 required".into(),
            ));
        }
        Ok(RadialGrid {
            s_min,
            s_max,
            panels_per_decade,
            nodes_per_panel,
        })
    }

    /// Default grid for a tower: from well below the smallest scale up
    /// to the boundary, fine enough for the steepest bubble.
    pub fn for_tower(tower: &TowerProfile) -> Self {
        let beta_max = tower
            .betas()
            .betas()
            .iter()
            .fold(1.0f64, |acc, &v| acc.max(v));
        RadialGrid {
            s_min: tower.scales().log_delta(1) - 15.0,
            s_max: 0.0,
            panels_per_decade: ppd_for_beta(beta_max),
            nodes_per_panel: 16,
        }
    }

    fn panel_count(&self) -> usize {
        let decades = (self.s_max - self.s_min) / LN_10;
        ((decades * self.panels_per_decade as f64).ceil() as usize).max(1)
    }
}

/// Panel resolution resolving features of width `1/beta` in `s`.
pub fn ppd_for_beta(beta: f64) -> u32 {
    ((6.0 * beta * LN_10).ceil() as u32).max(12)
}

/// `2 pi * integral of f(e^s) e^{2s} ds` over the grid range.
///
/// The callback returns the integrand as a signed log magnitude; the
/// exponential is taken only after the area weight `2s` is added, so
/// integrands peaked at scale `delta` stay representable as long as
/// `f r^2` does.  Panels are integrated concurrently; accumulation is
/// order-fixed compensated summation, so results are bit-reproducible.
pub fn integrate_radial<F>(f: F, grid: &RadialGrid) -> Result<f64>
where
    F: Fn(f64) -> Result<SignedLog> + Sync,
{
    let n_panels = grid.panel_count();
    let width = (grid.s_max - grid.s_min) / n_panels as f64;
    let rule = gauss_legendre(grid.nodes_per_panel as usize);
    let partials: Vec<Result<f64>> = (0..n_panels)
        .into_par_iter()
        .map(|i| {
            let lo = grid.s_min + i as f64 * width;
            let half = 0.5 * width;
            let mid = lo + half;
            let mut acc = CompensatedSum::new();
            for &(x, w) in &rule {
                let s = mid + half * x;
                let v = f(s)?;
                let val = if v.is_zero() {
                    0.0
                } else {
                    v.sign as f64 * (v.log_abs + 2.0 * s).exp()
                };
                if !val.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite integrand at s = {s} (log magnitude {})",
                        v.log_abs
                    )));
                }
                acc.add(w * half * val);
            }
            Ok(acc.total())
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in partials {
        total.add(p?);
    }
    Ok(2.0 * std::f64::consts::PI * total.total())
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence; deterministic for a given order.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Whole-plane mass of a single bubble, `integral |x|^{beta-2} e^w dx`;
/// analytically `4 pi beta` for every scale.
pub fn bubble_mass(beta: f64, log_delta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Validation(format!("beta must be positive, got {beta}")));
    }
    let bubble = crate::tower::BubbleProfile::new(beta, log_delta)?;
    let margin = 60.0 / beta;
    // truncation tail: 4 pi beta e^{-60}, far below 1e-12 of the total
    let grid = RadialGrid::new(
        log_delta - margin,
        log_delta + margin,
        ppd_for_beta(beta),
        16,
    )?;
    integrate_radial(
        |s| {
            Ok(SignedLog::positive(
                (beta - 2.0) * s + crate::tower::eval_w(&bubble, s),
            ))
        },
        &grid,
    )
}

/// The two log-weighted kernel integrals
/// `integral 2 b^2 |y|^{b-2} (1+|y|^b)^{-2} (1-|y|^b)/(1+|y|^b) L(y) dy`
/// with `L = ln(1+|y|^b)` and `L = ln|y|`; analytically `-2 pi beta`
/// and `-4 pi`.
pub fn step4_identities(beta: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0) {
        return Err(Error::Validation(format!("beta must be positive, got {beta}")));
    }
    let margin = 60.0 / beta;
    let grid = RadialGrid::new(-margin, margin, ppd_for_beta(beta), 16)?;
    // density factor (delta = 1) times the odd weight (1-r^b)/(1+r^b)
    let base = move |s: f64| -> SignedLog {
        let bs = beta * s;
        let log_density =
            (2.0 * beta * beta).ln() + (beta - 2.0) * s - 2.0 * crate::logdomain::log1pexp(bs);
        let z = -(0.5 * bs).tanh();
        if z == 0.0 {
            SignedLog::ZERO
        } else {
            SignedLog::new(log_density + z.abs().ln(), if z > 0.0 { 1 } else { -1 })
        }
    };
    let first = integrate_radial(
        |s| {
            let b = base(s);
            let l = crate::logdomain::log1pexp(beta * s); // ln(1 + r^beta) >= 0
            if l == 0.0 || b.is_zero() {
                return Ok(SignedLog::ZERO);
            }
            Ok(SignedLog::new(b.log_abs + l.ln(), b.sign))
        },
        &grid,
    )?;
    let second = integrate_radial(
        |s| {
            let b = base(s);
            if s == 0.0 || b.is_zero() {
                return Ok(SignedLog::ZERO);
            }
            Ok(SignedLog::new(
                b.log_abs + s.abs().ln(),
                if s > 0.0 { b.sign } else { -b.sign },
            ))
        },
        &grid,
    )?;
    Ok((first, second))
}

/// L^p norms of the analytic residual, with per-annulus breakdown.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub p: f64,
    pub lambda: LambdaPair,
    /// `||R_1||_p` and `||R_2||_p` over the whole grid range.
    pub norm1: f64,
    pub norm2: f64,
    /// Per-annulus integrals of `|R_i|^p`; they sum to `norm_i^p`.
    pub per_annulus: Vec<AnnulusContribution>,
}

#[derive(Debug, Clone, Copy)]
pub struct AnnulusContribution {
    pub ell: u32,
    pub s_lo: f64,
    pub s_hi: f64,
    pub pth_power: [f64; 2],
}

/// Sign changes of one residual component on `[lo, hi]`, located by a
/// uniform sign scan refined by bisection.  `|R|^p` has a kink at each
/// zero, so quadrature panels must end there to keep their full order.
fn residual_zeros(tower: &TowerProfile, comp: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let sign_at = |s: f64| -> Result<i8> {
        let (r1, r2) = tower.residual(s)?;
        Ok(if comp == 0 { r1.sign } else { r2.sign })
    };
    let n = 800;
    let mut zeros = Vec::new();
    let mut prev_s = lo;
    let mut prev_sign = sign_at(lo)?;
    for i in 1..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let sign = sign_at(s)?;
        if sign != prev_sign && sign != 0 && prev_sign != 0 {
            let (mut a, mut b) = (prev_s, s);
            let (mut sa, _) = (prev_sign, sign);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if b - a < 1e-13 * mid.abs().max(1.0) {
                    break;
                }
                let sm = sign_at(mid)?;
                if sm == sa || sm == 0 {
                    a = mid;
                    sa = if sm == 0 { sa } else { sm };
                } else {
                    b = mid;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        prev_s = s;
        prev_sign = sign;
    }
    Ok(zeros)
}

/// Integrate over `[lo, hi]` split at the given break points, each
/// segment with its own composite panels.
fn integrate_split<F>(f: &F, lo: f64, hi: f64, breaks: &[f64], grid: &RadialGrid) -> Result<f64>
where
    F: Fn(f64) -> Result<SignedLog> + Sync,
{
    let mut edges = vec![lo];
    for &b in breaks {
        if b > lo && b < hi {
            edges.push(b);
        }
    }
    edges.push(hi);
    let mut total = CompensatedSum::new();
    for pair in edges.windows(2) {
        if pair[1] - pair[0] < 1e-14 {
            continue;
        }
        let seg = RadialGrid::new(pair[0], pair[1], grid.panels_per_decade, grid.nodes_per_panel)?;
        total.add(integrate_radial(f, &seg)?);
    }
    Ok(total.total())
}

/// `||R_lambda||_p` by quadrature of the stabilized residual.
///
/// The integrand is assembled as `exp(p ln|R| + 2s)` per node, so peaks
/// of order `delta^{-2}` never overflow; panel boundaries are placed at
/// the zeros of each component, where `|R|^p` loses smoothness.
pub fn lp_residual_norm(tower: &TowerProfile, p: f64, grid: &RadialGrid) -> Result<ResidualReport> {
    if !(p > 1.0 && p <= 1.5) {
        return Err(Error::Validation(format!(
            "p must lie in (1, 1.5] (close to 1), got {p}"
        )));
    }
    let component = |comp: usize| {
        move |s: f64| -> Result<SignedLog> {
            let (r1, r2) = tower.residual(s)?;
            let r = if comp == 0 { r1 } else { r2 };
            Ok(SignedLog::positive(p * r.log_abs))
        }
    };
    let zeros = [
        residual_zeros(tower, 0, grid.s_min, grid.s_max)?,
        residual_zeros(tower, 1, grid.s_min, grid.s_max)?,
    ];
    let total1 = integrate_split(&component(0), grid.s_min, grid.s_max, &zeros[0], grid)?;
    let total2 = integrate_split(&component(1), grid.s_min, grid.s_max, &zeros[1], grid)?;
    let mut per_annulus = Vec::with_capacity(tower.k() as usize);
    for ell in 1..=tower.k() {
        let (lo, hi) = tower.annulus(ell);
        let s_lo = lo.max(grid.s_min);
        let s_hi = hi.min(grid.s_max);
        if !(s_lo < s_hi) {
            per_annulus.push(AnnulusContribution {
                ell,
                s_lo,
                s_hi,
                pth_power: [0.0, 0.0],
            });
            continue;
        }
        let c1 = integrate_split(&component(0), s_lo, s_hi, &zeros[0], grid)?;
        let c2 = integrate_split(&component(1), s_lo, s_hi, &zeros[1], grid)?;
        per_annulus.push(AnnulusContribution {
            ell,
            s_lo,
            s_hi,
            pth_power: [c1, c2],
        });
    }
    Ok(ResidualReport {
        p,
        lambda: tower.lambda(),
        norm1: total1.powf(1.0 / p),
        norm2: total2.powf(1.0 / p),
        per_annulus,
    })
}

/// Least-squares line through `(x, y)` points.
#[derive(Debug, Clone, Copy)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

/// Fit `y = slope * x + intercept`; with `(ln lambda, ln norm)` points
/// the slope estimates the decay order.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::Validation(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let spread = points
        .iter()
        .map(|p| (p.0 - mean_x).abs())
        .fold(0.0f64, f64::max);
    if spread < 1e-12 {
        return Err(Error::Validation("degenerate abscissae in scaling fit".into()));
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    Ok(ScalingFit {
        slope,
        intercept,
        rms_residual: (ss / n).sqrt(),
    })
}

/// `lambda_i integral_{B_rcut} h_i e^{W_i}` by quadrature, i.e. the
/// local mass of one component of the tower, up to the cutoff radius.
pub fn local_mass_quadrature(tower: &TowerProfile, component: u8, log_r_cut: f64) -> Result<f64> {
    if component != 1 && component != 2 {
        return Err(Error::Validation(format!(
            "component must be 1 or 2, got {component}"
        )));
    }
    if !(log_r_cut <= 0.0) {
        return Err(Error::Validation(format!(
            "cutoff must satisfy r_cut <= 1, got ln r_cut = {log_r_cut}"
        )));
    }
    let params = tower.params();
    let (alpha, log_lambda) = if component == 1 {
        (params.alpha1(), tower.lambda().log_lambda1)
    } else {
        (params.alpha2(), tower.lambda().log_lambda2)
    };
    let beta_min = tower
        .betas()
        .betas()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    let beta_max = tower
        .betas()
        .betas()
        .iter()
        .fold(1.0f64, |acc, &v| acc.max(v));
    let margin = 60.0 / beta_min.min(alpha);
    let grid = RadialGrid::new(
        tower.scales().log_delta(1) - margin,
        log_r_cut,
        ppd_for_beta(beta_max),
        16,
    )?;
    integrate_radial(
        |s| {
            let w = tower.main_term(s)?;
            let w_c = if component == 1 { w.0 } else { w.1 };
            Ok(SignedLog::positive(log_lambda + (alpha - 2.0) * s + w_c))
        },
        &grid,
    )
}

/// Deviation of the main term from its Green-function limit at radius
/// `r = e^{log_r}`: `|W_i(r) - c_i G(r)|` with `G(r) = -ln(r)/(2 pi)`,
/// `c_1 = 2 m_1 - a m_2` and `c_2 = 2 m_2 - b m_1`.
pub fn green_limit(tower: &TowerProfile, log_r: f64) -> Result<(f64, f64)> {
    if !(log_r >= 0.1f64.ln() && log_r <= 0.0) {
        return Err(Error::Validation(format!(
            "Green limit requires 0.1 <= r <= 1, got ln r = {log_r}"
        )));
    }
    let m = masses::local_masses(tower.betas(), tower.k())?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let (m1, m2) = (two_pi * m.m1_over_2pi, two_pi * m.m2_over_2pi);
    let g = -log_r / two_pi;
    let (w1, w2) = tower.main_term(log_r)?;
    let params = tower.params();
    Ok((
        (w1 - (2.0 * m1 - params.a() * m2) * g).abs(),
        (w2 - (2.0 * m2 - params.b() * m1) * g).abs(),
    ))
}
