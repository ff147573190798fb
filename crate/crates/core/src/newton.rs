//! Radial finite-difference Newton solver for the full nonlinear system
//! on the unit disc, seeded by the tower.
//!
//! In `s = ln r` the system reads
//! `u1'' = -(2 l1 e^{a1 s + u1} - a l2 e^{a2 s + u2})` and its mirror,
//! with `u(0) = 0` on the boundary and a homogeneous Neumann condition
//! at the inner cutoff, where every bubble is flat in `s`.  The
//! discretization is second order; the Jacobian is block tridiagonal
//! with 2x2 blocks and is eliminated directly.

use crate::error::{Error, Result};
use crate::masses::MassPair;
use crate::scales::LambdaPair;
use crate::spectrum::SystemParams;
use crate::tower::TowerProfile;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Grid nodes per unit of `s`.
    pub nodes_per_unit: f64,
    /// Hard cap on Newton iterations.
    pub max_iterations: u32,
    /// Step-halving cap in the line search.
    pub max_halvings: u32,
    /// Convergence threshold on the sup norm of the discrete equations.
    pub tolerance: f64,
    /// Distance (in `s`) between the smallest scale and the inner cutoff.
    pub inner_margin: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            nodes_per_unit: 100.0,
            max_iterations: 50,
            max_halvings: 12,
            tolerance: 1e-12,
            inner_margin: 15.0,
        }
    }
}

/// Outcome of one Newton solve.
#[derive(Debug, Clone)]
pub struct SolutionReport {
    /// Grid in `s = ln r`, ascending, last node at `s = 0`.
    pub s: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// Tower components on the same grid.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    /// Sup norm of `u_i - W_i` per component.
    pub phi_sup: [f64; 2],
    /// Sup norm of the discrete equations (second differences plus
    /// `h^2` times the nonlinearity) at the final iterate.
    pub final_residual: f64,
    /// Local masses recovered by trapezoid quadrature on the grid,
    /// as multiples of `2 pi`.
    pub masses: MassPair,
    pub iterations: u32,
    pub converged: bool,
    pub lambda: LambdaPair,
    pub k: u32,
}

struct Discretization {
    params: SystemParams,
    lambda: LambdaPair,
    s: Vec<f64>,
    h: f64,
}

impl Discretization {
    /// Right-hand sides `F_i = 2 l_i e^{a_i s + u_i} - c l_j e^{a_j s + u_j}`.
    fn nonlinearity(&self, i: usize, u1: f64, u2: f64) -> (f64, f64) {
        let s = self.s[i];
        let p = &self.params;
        let e1 = (std::f64::consts::LN_2 + self.lambda.log_lambda1 + p.alpha1() * s + u1).exp();
        let e2 = (std::f64::consts::LN_2 + self.lambda.log_lambda2 + p.alpha2() * s + u2).exp();
        (e1 - 0.5 * p.a() * e2, e2 - 0.5 * p.b() * e1)
    }

    /// Jacobian block of the nonlinearity.
    fn nonlinearity_jacobian(&self, i: usize, u1: f64, u2: f64) -> [[f64; 2]; 2] {
        let s = self.s[i];
        let p = &self.params;
        let e1 = (std::f64::consts::LN_2 + self.lambda.log_lambda1 + p.alpha1() * s + u1).exp();
        let e2 = (std::f64::consts::LN_2 + self.lambda.log_lambda2 + p.alpha2() * s + u2).exp();
        [
            [e1, -0.5 * p.a() * e2],
            [-0.5 * p.b() * e1, e2],
        ]
    }

    /// Discrete equations, scaled by `h^2`.  Unknowns are the interior
    /// nodes `0..n`; the boundary node carries `u = 0` and the innermost
    /// equation uses the ghost-point Neumann closure `u_{-1} = u_1`.
    fn residual(&self, u: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = u.len() - 1; // index of the boundary node
        let h2 = self.h * self.h;
        let mut g = vec![[0.0f64; 2]; n];
        for i in 0..n {
            let (f1, f2) = self.nonlinearity(i, u[i][0], u[i][1]);
            if i == 0 {
                g[0][0] = 2.0 * (u[1][0] - u[0][0]) + h2 * f1;
                g[0][1] = 2.0 * (u[1][1] - u[0][1]) + h2 * f2;
            } else {
                g[i][0] = u[i - 1][0] - 2.0 * u[i][0] + u[i + 1][0] + h2 * f1;
                g[i][1] = u[i - 1][1] - 2.0 * u[i][1] + u[i + 1][1] + h2 * f2;
            }
        }
        g
    }
}

fn sup_norm(g: &[[f64; 2]]) -> f64 {
    g.iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Block-tridiagonal elimination for the Newton correction.
///
/// Row `i` couples `u_{i-1}` (identity), the diagonal block
/// `-2 I + h^2 J_i`, and `u_{i+1}` (identity; `2 I` in the Neumann row).
fn solve_block_tridiagonal(
    disc: &Discretization,
    u: &[[f64; 2]],
    rhs: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    let n = rhs.len();
    let h2 = disc.h * disc.h;
    let mut diag = Vec::with_capacity(n);
    for (i, row) in u.iter().enumerate().take(n) {
        let j = disc.nonlinearity_jacobian(i, row[0], row[1]);
        diag.push([
            [-2.0 + h2 * j[0][0], h2 * j[0][1]],
            [h2 * j[1][0], -2.0 + h2 * j[1][1]],
        ]);
    }
    // forward sweep: eliminate the subdiagonal identity blocks
    let mut carry = Vec::with_capacity(n); // C_i' = B_i^{-1} C_i
    let mut rhs_mod: Vec<[f64; 2]> = rhs.to_vec();
    let mut b = diag[0];
    for i in 0..n {
        if i > 0 {
            // B_i <- B_i - I * C_{i-1}'
            let c_prev: [[f64; 2]; 2] = carry[i - 1];
            b = diag[i];
            for r in 0..2 {
                for c in 0..2 {
                    b[r][c] -= c_prev[r][c];
                }
            }
            let prev = rhs_mod[i - 1];
            rhs_mod[i][0] -= prev[0];
            rhs_mod[i][1] -= prev[1];
        }
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(Error::Numerical(
                "Jacobian block singular to working precision".into(),
            ));
        }
        let inv = [
            [b[1][1] / det, -b[0][1] / det],
            [-b[1][0] / det, b[0][0] / det],
        ];
        // upper block is I for interior rows, 2I in the Neumann row,
        // absent in the last row
        let upper_scale = if i == 0 { 2.0 } else { 1.0 };
        let c_mod = if i + 1 < n {
            [
                [inv[0][0] * upper_scale, inv[0][1] * upper_scale],
                [inv[1][0] * upper_scale, inv[1][1] * upper_scale],
            ]
        } else {
            [[0.0; 2]; 2]
        };
        carry.push(c_mod);
        let r = rhs_mod[i];
        rhs_mod[i] = [
            inv[0][0] * r[0] + inv[0][1] * r[1],
            inv[1][0] * r[0] + inv[1][1] * r[1],
        ];
    }
    // back substitution
    let mut x = rhs_mod;
    for i in (0..n.saturating_sub(1)).rev() {
        let c = carry[i];
        let nxt = x[i + 1];
        x[i][0] -= c[0][0] * nxt[0] + c[0][1] * nxt[1];
        x[i][1] -= c[1][0] * nxt[0] + c[1][1] * nxt[1];
    }
    Ok(x)
}

fn recovered_masses(disc: &Discretization, u: &[[f64; 2]], k: u32) -> MassPair {
    // trapezoid quadrature of lambda_i e^{alpha_i s + u_i}, matching the
    // order of the discretization
    let p = &disc.params;
    let mut m = [0.0f64; 2];
    for comp in 0..2 {
        let (alpha, log_lam) = if comp == 0 {
            (p.alpha1(), disc.lambda.log_lambda1)
        } else {
            (p.alpha2(), disc.lambda.log_lambda2)
        };
        let integrand =
            |i: usize| -> f64 { (log_lam + alpha * disc.s[i] + u[i][comp]).exp() };
        let mut acc = 0.0;
        for i in 0..disc.s.len() - 1 {
            acc += 0.5 * (integrand(i) + integrand(i + 1)) * disc.h;
        }
        m[comp] = acc;
    }
    MassPair {
        m1_over_2pi: m[0],
        m2_over_2pi: m[1],
        k,
        swapped: false,
    }
}

/// Damped Newton solve seeded by the tower.
pub fn solve(
    params: &SystemParams,
    k: u32,
    lambda: LambdaPair,
    opts: &SolveOptions,
) -> Result<SolutionReport> {
    let tower = TowerProfile::new(*params, k, lambda)?;
    solve_seeded(&tower, opts, None)
}

/// Newton solve with an optional initial remainder `phi` added on top
/// of the tower (given on an arbitrary ascending grid, interpolated).
pub fn solve_seeded(
    tower: &TowerProfile,
    opts: &SolveOptions,
    initial_phi: Option<(&[f64], &[[f64; 2]])>,
) -> Result<SolutionReport> {
    if opts.nodes_per_unit < 2.0 || !opts.nodes_per_unit.is_finite() {
        return Err(Error::Validation(
            "nodes_per_unit must be finite and at least 2".into(),
        ));
    }
    // a converged report always means the equations hold to 1e-10
    if !(opts.tolerance > 0.0 && opts.tolerance <= 1e-10) {
        return Err(Error::Validation(format!(
            "tolerance must lie in (0, 1e-10], got {}",
            opts.tolerance
        )));
    }
    let s_min = tower.scales().log_delta(1) - opts.inner_margin;
    let n = ((-s_min) * opts.nodes_per_unit).ceil() as usize;
    if n < 8 {
        return Err(Error::Validation("grid too coarse".into()));
    }
    let h = -s_min / n as f64;
    let mut s: Vec<f64> = (0..=n).map(|i| s_min + i as f64 * h).collect();
    s[n] = 0.0;
    let disc = Discretization {
        params: *tower.params(),
        lambda: tower.lambda(),
        s,
        h,
    };

    let mut w = Vec::with_capacity(n + 1);
    for &si in &disc.s {
        w.push(tower.main_term(si)?);
    }
    let mut u: Vec<[f64; 2]> = w.iter().map(|&(w1, w2)| [w1, w2]).collect();
    u[n] = [0.0, 0.0];
    if let Some((grid, phi)) = initial_phi {
        for i in 0..n {
            let p = interp_linear(grid, phi, disc.s[i]);
            u[i][0] += p[0];
            u[i][1] += p[1];
        }
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut residual_norm = sup_norm(&disc.residual(&u));
    while iterations < opts.max_iterations {
        if residual_norm <= opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let g = disc.residual(&u);
        let rhs: Vec<[f64; 2]> = g.iter().map(|r| [-r[0], -r[1]]).collect();
        let du = solve_block_tridiagonal(&disc, &u, &rhs)?;
        let mut step = 1.0;
        let mut accepted = u.clone();
        for _ in 0..=opts.max_halvings {
            let mut trial = u.clone();
            for i in 0..n {
                trial[i][0] += step * du[i][0];
                trial[i][1] += step * du[i][1];
            }
            let trial_norm = sup_norm(&disc.residual(&trial));
            if trial_norm.is_finite() && trial_norm < residual_norm {
                accepted = trial;
                residual_norm = trial_norm;
                break;
            }
            step *= 0.5;
        }
        if accepted == u {
            // no decrease even at the smallest step: take it anyway and
            // let the iteration cap decide
            for i in 0..n {
                accepted[i][0] = u[i][0] + step * du[i][0];
                accepted[i][1] = u[i][1] + step * du[i][1];
            }
            let norm = sup_norm(&disc.residual(&accepted));
            if !norm.is_finite() {
                break;
            }
            residual_norm = norm;
        }
        u = accepted;
    }
    if residual_norm <= opts.tolerance {
        converged = true;
    }

    let mut phi_sup = [0.0f64; 2];
    for i in 0..=n {
        phi_sup[0] = phi_sup[0].max((u[i][0] - w[i].0).abs());
        phi_sup[1] = phi_sup[1].max((u[i][1] - w[i].1).abs());
    }
    let masses = recovered_masses(&disc, &u, tower.k());
    Ok(SolutionReport {
        u1: u.iter().map(|r| r[0]).collect(),
        u2: u.iter().map(|r| r[1]).collect(),
        w1: w.iter().map(|&(a, _)| a).collect(),
        w2: w.iter().map(|&(_, b)| b).collect(),
        s: disc.s,
        phi_sup,
        final_residual: residual_norm,
        masses,
        iterations,
        converged,
        lambda: tower.lambda(),
        k: tower.k(),
    })
}

fn interp_linear(grid: &[f64], values: &[[f64; 2]], x: f64) -> [f64; 2] {
    if grid.is_empty() {
        return [0.0, 0.0];
    }
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[grid.len() - 1] {
        return values[values.len() - 1];
    }
    let mut lo = 0;
    let mut hi = grid.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if grid[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (x - grid[lo]) / (grid[hi] - grid[lo]);
    [
        values[lo][0] + t * (values[hi][0] - values[lo][0]),
        values[lo][1] + t * (values[hi][1] - values[lo][1]),
    ]
}

/// Chain of solves along a geometric `lambda` path, warm-starting each
/// step from the previous remainder re-centered on the new tower.
///
/// Aborts at the first non-converged step, returning the partial chain.
pub fn continuation(
    params: &SystemParams,
    k: u32,
    lambda_start: LambdaPair,
    lambda_end: LambdaPair,
    steps: u32,
    opts: &SolveOptions,
) -> Result<Vec<SolutionReport>> {
    if steps < 2 {
        return Err(Error::Validation("continuation needs at least 2 steps".into()));
    }
    // height validation happens before any solve
    let betas = crate::spectrum::compute_betas(params, k)?;
    if !betas.kmax().allows(k) {
        return Err(Error::Validation(format!(
            "k = {k} exceeds k_max = {} for these parameters",
            betas.kmax()
        )));
    }
    let mut out = Vec::with_capacity(steps as usize);
    let mut prev: Option<SolutionReport> = None;
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let lambda = LambdaPair::from_ln(
            lambda_start.log_lambda1 + t * (lambda_end.log_lambda1 - lambda_start.log_lambda1),
            lambda_start.log_lambda2 + t * (lambda_end.log_lambda2 - lambda_start.log_lambda2),
        )?;
        let tower = TowerProfile::new(*params, k, lambda)?;
        let report = match &prev {
            None => solve_seeded(&tower, opts, None)?,
            Some(p) => {
                let phi: Vec<[f64; 2]> = p
                    .s
                    .iter()
                    .enumerate()
                    .map(|(j, _)| [p.u1[j] - p.w1[j], p.u2[j] - p.w2[j]])
                    .collect();
                solve_seeded(&tower, opts, Some((&p.s, &phi)))?
            }
        };
        let converged = report.converged;
        out.push(report);
        prev = out.last().cloned();
        if !converged {
            break;
        }
    }
    Ok(out)
}
